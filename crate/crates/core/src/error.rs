use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric is not positive definite (smallest eigenvalue {min_eig:e}, norm {norm:e})")]
    NotPositiveDefinite { min_eig: f64, norm: f64 },

    #[error("metric is not symmetric")]
    NotSymmetric,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("point is outside the feasible set: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("zero reference norm in relative tolerance")]
    ZeroReference,

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("malformed instance file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
