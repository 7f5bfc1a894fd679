use thiserror::Error;

/// Errors raised across the extraction and analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid value: {0}")]
    Value(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("all samples below confidence threshold {threshold}")]
    AllLowConfidence { threshold: f64 },
    #[error("no cycles detected: {0}")]
    NoCycles(String),
    #[error("curve fit failed: {0}")]
    Fit(String),
    #[error("segmentation failed: {0}")]
    Segmentation(String),
    #[error("no stand-up phase found")]
    NoStandUp,
    #[error("eigen-decomposition did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:e})")]
    Convergence { sweeps: usize, off_diagonal: f64 },
    #[error("empty feature matrix: {0}")]
    EmptyMatrix(String),
    #[error("degenerate fold {fold}: {reason}")]
    DegenerateFold { fold: usize, reason: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
