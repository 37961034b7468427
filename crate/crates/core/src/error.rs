use std::path::PathBuf;

/// Errors raised anywhere in the captioning pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("audio clip has no samples")]
    EmptyClip,
    #[error("clip has {samples} samples, fewer than one window of {window}")]
    ClipTooShort { samples: usize, window: usize },
    #[error("invalid frequency band: {0}")]
    InvalidBand(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported file version {0}")]
    UnsupportedVersion(u32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("feature matrix has no rows")]
    EmptyFeature,
    #[error("truncated payload: {0}")]
    TruncatedPayload(String),
    #[error("caption is empty")]
    EmptyCaption,
    #[error("every target position is padding")]
    EmptyAfterMask,
    #[error("non-finite value in {0}")]
    NonFiniteGradient(String),
    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    UnknownId { id: usize, vocab_size: usize },
    #[error("checkpoint is missing tensor {0}")]
    MissingTensor(String),
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("corpus of {0} pairs is too small (need at least 2)")]
    CorpusTooSmall(usize),
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("file is empty: {0}")]
    EmptyFile(PathBuf),
    #[error("requested {requested} training records but only {available} exist")]
    NotEnoughRecords { requested: usize, available: usize },
    #[error("no feature file for audio id {0}")]
    MissingFeature(String),
    #[error("candidate id {0} has no references")]
    UnmatchedId(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
