//! Unsupervised word prominence and boundary labels from speech, prosody-tagged
//! TTS input strings, and objective evaluation of synthetic prosody.

pub mod api;
pub mod augment;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod labeler;
pub mod signals;
pub mod wavelet;

pub use config::Config;
pub use error::{Error, Result};

/// Guide chapters, compiled so that their snippets run as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/signals.md")]
    pub mod signals {}
    #[doc = include_str!("../../../book/src/wavelets.md")]
    pub mod wavelets {}
    #[doc = include_str!("../../../book/src/labeling.md")]
    pub mod labeling {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    pub mod configuration {}
    #[doc = include_str!("../../../book/src/augmentation.md")]
    pub mod augmentation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
