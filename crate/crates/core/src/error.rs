use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("truncation too small: tail mass {tail:.3e} exceeds {tol:.1e} at dim {dim}")]
    Truncation { tail: f64, tol: f64, dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("numerical instability: {0}")]
    NumericalInstability(String),
    #[error("probabilities do not sum to one: {0}")]
    InvalidDistribution(String),
    #[error("peak unresolved: {0}")]
    PeakUnresolved(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("undefined limit: {0}")]
    UndefinedLimit(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("estimator undefined: {0}")]
    EstimatorUndefined(String),
    #[error("conjecture violated: {0}")]
    ConjectureViolation(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
