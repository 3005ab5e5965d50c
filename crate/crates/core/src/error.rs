use thiserror::Error;

/// Errors surfaced by kernels, models, step computations and the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("vectors must have at least one entry")]
    EmptyVector,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trial step has zero length")]
    ZeroTrialStep,

    #[error("gradient is zero (stationary point)")]
    StationaryPoint,

    #[error("trial step is not a descent direction (g'sᵗ = {0:e} > 0)")]
    NotDescent(f64),

    #[error("non-convex data: curvature s'y = {0:e}")]
    NonConvex(f64),

    #[error("curvature (yᵗ)ᵀsᵗ is zero")]
    ZeroCurvature,

    #[error("no sign change of the complementarity residual in the multiplier bracket")]
    NoSignChange,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("no feasible point on the search grid")]
    EmptyGrid,

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
