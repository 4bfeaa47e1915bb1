//! Reading audio, forced alignments and pronunciation lexicons.

mod alignment;
mod audio;
mod lexicon;

pub use alignment::{parse_alignment, tsv_phones_path, Alignment, AlignmentFormat, Interval, Word, SILENCE};
pub use audio::{read_audio, write_wav, AudioBuffer, WavEncoding};
pub use lexicon::{load_lexicon, Lexicon, Pronunciation};
