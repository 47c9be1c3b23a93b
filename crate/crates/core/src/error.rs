use thiserror::Error;

/// Errors raised by the optimisation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is singular even with jitter {jitter:e}")]
    SingularCovariance { jitter: f64 },

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("division by zero: truth value at index {index} is zero")]
    DivisionByZero { index: usize },

    #[error("dataset is empty; observe an initial point first")]
    EmptyDataset,

    #[error("value {value} for dimension {dim} lies outside [{lower}, {upper}]")]
    OutOfBounds {
        dim: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("session: {0}")]
    Session(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
