use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid Pauli channel probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite rate at t = {0}")]
    NonFiniteRate(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("constraint residual {0:e} exceeds tolerance")]
    ConstraintResidual(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
