use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV data: {0}")]
    Format(String),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("no speaker directories with audio found under {}", .0.display())]
    EmptyCorpus(PathBuf),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("signal of length {len} is too short for {levels} decomposition levels")]
    Depth { levels: usize, len: usize },
    #[error("decomposition structure mismatch: {0}")]
    Structure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("signal of {len} samples is shorter than one frame ({frame_len} samples)")]
    TooShort { len: usize, frame_len: usize },
    #[error("value outside domain: {0}")]
    Domain(String),
    #[error("filterbank resolution too coarse: {0}")]
    Resolution(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("cannot pool an MFCC matrix with zero frames")]
    EmptyFeature,
    #[error(
        "label {label:?} has {count} member(s); at least {required} are required"
    )]
    InsufficientData {
        label: String,
        count: usize,
        required: usize,
    },
    #[error("train and test sets share clip id {0:?}")]
    Leakage(String),
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),
    #[error("credential store error: {0}")]
    Credential(String),
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
