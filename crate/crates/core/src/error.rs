use thiserror::Error;

/// Errors raised by model evaluation, numerics, estimators and audits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter {0:?} lies outside the parameter space")]
    OutOfSupport(Vec<f64>),

    #[error("observation {0:?} lies outside the declared observation support")]
    DomainError(Vec<f64>),

    #[error("likelihood-ratio denominator vanished at observation {0:?}")]
    DivisionByZeroSupport(Vec<f64>),

    #[error("prior is not normalisable; {0} needs a proper prior")]
    NonNormalisablePrior(&'static str),

    #[error("integral did not converge: estimate {estimate:e}, error bound {error:e}")]
    IntegralNotConverged { estimate: f64, error: f64 },

    #[error("unsupported problem class: {0}")]
    UnsupportedClass(String),

    #[error("divergence is singular: squared Hellinger distance {0} is too close to 1")]
    SingularDivergence(f64),

    #[error("point {point:?} is closer than {margin:e} to the parameter-space boundary")]
    BoundaryTooClose { point: Vec<f64>, margin: f64 },

    #[error("loss evaluated to a non-finite value at {0:?}")]
    NonFiniteLoss(Vec<f64>),

    #[error("no analytic Fisher information for {0}")]
    NoAnalyticForm(String),

    #[error("metric was non-finite at every sampled point")]
    NoFiniteValue,

    #[error("estimator is not well defined: {0}")]
    IllDefinedEstimator(String),

    #[error("invalid risk spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
