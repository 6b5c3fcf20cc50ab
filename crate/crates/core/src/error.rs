use thiserror::Error;

/// Errors raised by problem construction, the methods and the certificate engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot construct problem: {0}")]
    Construction(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("oracle failure at k={k}: {detail}")]
    OracleFailure { k: usize, detail: String },

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("cannot parse problem id `{id}`: {reason}")]
    ProblemId { id: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
