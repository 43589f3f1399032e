use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum VpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The density does not belong to the admissible constraint set.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// An iteration stopped before meeting its tolerance.
    #[error("not converged: {0}")]
    NotConverged(String),

    /// The density support reached the outer edge of the radial grid.
    #[error("support reaches the grid edge (r_max = {r_max})")]
    GridTooSmall { r_max: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VpError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(VpError::InvalidArgument(msg.into()))
}
