use thiserror::Error;

/// Everything that can go wrong inside the lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParameters(Vec<String>),

    #[error("mesh needs at least 2 elements, got {0}")]
    TooFewElements(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("clamped-end condition violated: {0}")]
    ClampViolation(String),

    #[error("tip velocity does not match the velocity field at x = L ({0})")]
    TipMismatch(String),

    #[error("matrix is singular to working precision (pivot {pivot:e} in column {column})")]
    Singular { pivot: f64, column: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("shift i*lambda is singular at lambda = {lambda}")]
    SingularShift { lambda: f64 },

    #[error("Newton iteration for root {index} did not converge after {iterations} iterations")]
    RootNotConverged { index: usize, iterations: usize },

    #[error("need at least {required} samples in band [{lo}, {hi}], found {found}")]
    InsufficientData {
        required: usize,
        found: usize,
        lo: f64,
        hi: f64,
    },

    #[error("window end {t1} exceeds the exponential-tail guard {guard}")]
    TailGuard { t1: f64, guard: f64 },

    #[error("trajectory too coarse for time quadrature: record_every = {0}, need 1")]
    TooCoarse(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
