use std::path::PathBuf;

/// Errors produced anywhere in the labeling, augmentation and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("invalid audio: {0}")]
    InvalidAudio(String),

    #[error("audio too short: {0}")]
    TooShort(String),

    #[error("alignment parse error at line {line}: {msg}")]
    AlignmentSyntax { line: usize, msg: String },

    #[error("missing tier \"{0}\"")]
    MissingTier(String),

    #[error("overlapping intervals at index {index} in tier \"{tier}\"")]
    OverlappingIntervals { tier: String, index: usize },

    #[error("invalid interval at index {index} in tier \"{tier}\": start {start} end {end}")]
    InvalidInterval {
        tier: String,
        index: usize,
        start: f64,
        end: f64,
    },

    #[error("phone {index} ({label}) is not covered by any word or silence")]
    UncoveredPhone { index: usize, label: String },

    #[error("empty alignment")]
    EmptyAlignment,

    #[error("lexicon line {line}: {msg}")]
    Lexicon { line: usize, msg: String },

    #[error("out-of-vocabulary word \"{0}\"")]
    OutOfVocabulary(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("too few frames: {0}")]
    TooFewFrames(String),

    #[error("empty band")]
    EmptyBand,

    #[error("negative value {0} cannot be discretized")]
    NegativeValue(f64),

    #[error("duration mismatch: audio {audio:.3} s, alignment ends at {alignment:.3} s")]
    DurationMismatch { audio: f64, alignment: f64 },

    #[error("word-sequence mismatch at index {0}")]
    WordSequenceMismatch(usize),

    #[error("phones before prominence token at position {0}")]
    PhonesBeforeProminence(usize),

    #[error("missing boundary token for word {0}")]
    MissingBoundary(usize),

    #[error("unknown token \"{0}\"")]
    UnknownToken(String),

    #[error("band-count mismatch: {0} vs {1}")]
    BandMismatch(usize, usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("utterance {id}: word count mismatch ({oracle} oracle vs {predicted} predicted)")]
    WordCountMismatch {
        id: String,
        oracle: usize,
        predicted: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no utterances")]
    NoUtterances,

    #[error("no common utterances")]
    NoCommonUtterances,

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
