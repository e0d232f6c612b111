use thiserror::Error;

pub type Result<T> = std::result::Result<T, QflowError>;

#[derive(Debug, Error)]
pub enum QflowError {
    #[error("point is not on the unit sphere: |z|^2 = {0}")]
    OffSphere(f64),

    #[error("field degree {field} exceeds basis degree {basis}")]
    DegreeMismatch { field: usize, basis: usize },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("measurement disagreement: {0}")]
    Disagreement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
