use thiserror::Error;

/// Errors raised by the simulators, solvers and predictors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "Newton iteration did not converge after {iterations} iterations (|grad| = {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate Hessian: smallest |eigenvalue| = {min_abs_eigenvalue:e}")]
    DegenerateHessian { min_abs_eigenvalue: f64 },

    #[error("critical point has the wrong kind: {0}")]
    WrongKind(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite state at step {step}; time step too large?")]
    NonFinite { step: u64 },

    #[error("all {attempted} replicas were censored at t_max")]
    AllCensored { attempted: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("singular linear system at row {row}")]
    SingularSystem { row: usize },

    #[error("sets A and B overlap")]
    OverlappingSets,

    #[error("path needs at least two nodes with strictly increasing times")]
    DegeneratePath,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
