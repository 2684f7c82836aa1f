use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown curve `{0}`")]
    UnknownCurve(String),
    #[error("curve `{0}` requires a seed")]
    MissingSeed(String),
    #[error("curve fails validation: {0}")]
    InvalidCurve(String),
    #[error("|Im s| = {im} exceeds strip limit {limit}")]
    StripLimitExceeded { im: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("target {index} coincides with a quadrature node")]
    NodeCoincidence { index: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("Nystrom interpolation requested without solve context")]
    MissingNystromContext,
    #[error("GMRES stagnated after {iterations} iterations (relative residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64 },
    #[error("GMRES did not reach tolerance within {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("singular system matrix")]
    SingularMatrix,
    #[error("no root in bracket: {0}")]
    NoRoot(String),
    #[error("source point must lie outside the closed domain")]
    SourceInside,
    #[error("expansion center too close to a fine node (distance {distance:e})")]
    DegenerateGeometry { distance: f64 },
    #[error("i/o: {0}")]
    Io(String),
    #[error("summation backend does not support {0}")]
    BackendMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
