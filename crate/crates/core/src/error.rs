use thiserror::Error;

/// Errors raised by the bound, region and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("state is not physical: minimum eigenvalue of cov + i*omega is {min_eigenvalue:e}")]
    Unphysical { min_eigenvalue: f64 },

    #[error("solver did not converge: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
