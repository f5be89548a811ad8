use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("malformed header {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("raw data size mismatch: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("non-positive spacing ({0}, {1}, {2})")]
    NonPositiveSpacing(f64, f64, f64),

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("annotation center ({z}, {y}, {x}) outside volume of dims ({nz}, {ny}, {nx})")]
    CenterOutOfBounds {
        z: i64,
        y: i64,
        x: i64,
        nz: usize,
        ny: usize,
        nx: usize,
    },

    #[error("slice count {requested} exceeds volume z-extent {available}")]
    SliceCountExceedsVolume { requested: usize, available: usize },

    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("single-class input: {0}")]
    SingleClass(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("not enough samples: {0}")]
    NotEnoughSamples(String),

    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("config validation failed: {0}")]
    Config(String),

    #[error("missing upstream artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter(_) | Error::MissingArtifact(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
