use thiserror::Error;

/// Failure modes surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear solver failed: relative residual {residual:.3e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },
    #[error("point location failed at ({y}, {eta})")]
    PointLocation { y: f64, eta: f64 },
    #[error("stability invariant violated: {0}")]
    InvariantViolation(String),
    #[error("malformed mesh file: {0}")]
    MeshFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
