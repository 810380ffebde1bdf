use thiserror::Error;

/// Errors reported by geometry operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("linear map is singular or badly conditioned: {0}")]
    SingularMap(String),

    #[error("unsupported operation for this representation: {0}")]
    UnsupportedRep(String),

    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
