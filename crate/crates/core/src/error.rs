//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation was applied to a chain of the wrong dimension.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Two chains indexed over different cell spaces were combined.
    #[error("cell space mismatch: {0}")]
    Mismatch(String),

    /// A documented precondition does not hold for the given input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A GF(2) linear system has no solution.
    #[error("no GF(2) solution: {0}")]
    NoSolution(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
