//! Mexican-hat continuous wavelet transform and ridge/valley line tracking.

mod cwt;
mod lines;

pub use cwt::{cwt, mexican_hat, ScaleBank, Scalogram, MEXICAN_HAT_CENTER_FREQUENCY};
pub use lines::{line_strength, track_lines, Line, LinePoint, Polarity};
