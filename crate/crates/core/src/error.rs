use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series are not aligned: first divergent epoch is MJD {epoch}")]
    Alignment { epoch: i64 },

    #[error("insufficient data: {what} needs at least {needed} points, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("degenerate normalization scale: series is identically zero")]
    DegenerateScale,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("degenerate Kalman update: innovation variance {0} is not positive")]
    DegenerateUpdate(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("refusing to overwrite existing output {0} (pass --force)")]
    WouldOverwrite(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
