use thiserror::Error;

/// Errors produced by the estimator, bound calculators and verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "parameter coordinate {coordinate} = {value} is outside the natural domain ({reason})"
    )]
    DomainViolation {
        coordinate: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("observation coordinate {coordinate} = {value} is outside the support")]
    OutsideSupport { coordinate: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{family} family does not support dimension {dim}")]
    UnsupportedDimension { family: &'static str, dim: usize },

    #[error("{0} is not an exponential family")]
    NotExponentialFamily(&'static str),

    #[error("{0}")]
    NotDifferentiable(String),

    #[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("lattice has {count} points, exceeding the cap of {cap}")]
    GridTooLarge { count: f64, cap: usize },

    #[error("grid contains no points")]
    EmptyGrid,

    #[error(
        "coordinate {coordinate} = {value} lies outside the grid box expanded by half a spacing"
    )]
    OutsideGrid { coordinate: usize, value: f64 },

    #[error("{context}: precondition violated: {condition}")]
    Precondition {
        context: &'static str,
        condition: String,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("penalized likelihood is non-finite at every grid point")]
    NoFiniteObjective,

    #[error("infinite loss on replicate {replicate}")]
    NonFiniteLoss { replicate: usize },

    #[error("a radial envelope is required to bound the tail of an infinite lattice")]
    MissingEnvelope,

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("Hessian estimate is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("runtime budget exceeded after {completed} of {requested} replicates")]
    BudgetExceeded { completed: usize, requested: usize },

    #[error("eigenvalue infimum over the domain is not positive ({infimum:e}); mesh of {mesh_points} points")]
    NonPositiveCurvature { infimum: f64, mesh_points: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn precondition(context: &'static str, condition: impl Into<String>) -> Error {
    Error::Precondition {
        context,
        condition: condition.into(),
    }
}
