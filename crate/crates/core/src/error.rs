use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("single-class dataset")]
    SingleClass,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("diverged (step size too large) at iteration {iteration}: gradient norm {grad_norm:e}")]
    Diverged { iteration: usize, grad_norm: f64 },

    #[error("singular Hessian; increase lambda")]
    SingularHessian,

    #[error("invalid curvature matrix: {0}")]
    InvalidCurvature(String),

    #[error("degenerate segment: {0}")]
    DegenerateSegment(&'static str),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
