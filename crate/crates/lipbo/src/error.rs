use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("matrix not positive definite after jitter up to {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("empty observation history")]
    EmptyHistory,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown benchmark '{name}'; known: {known}")]
    UnknownBenchmark { name: String, known: String },

    #[error("point {point:?} outside benchmark box")]
    OutsideBox { point: Vec<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
