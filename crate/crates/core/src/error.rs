use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// The request is outside what this implementation supports
    /// (too many classes for exhaustive search, too few observed variables).
    #[error("capability limit: {0}")]
    Capability(String),

    #[error("singular conversion: {0}")]
    SingularConversion(String),

    #[error("degenerate class mass: {0}")]
    DegenerateClass(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("tensor is not symmetric (max deviation {0:e})")]
    NonSymmetric(f64),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
