use thiserror::Error;

/// Errors raised by geometries, oracles, problems and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point leaves the domain: coordinate {index} = {value}")]
    DomainViolation { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("prox subproblem unbounded at coordinate {index} (lambda = {lambda})")]
    ProxInfeasible { index: usize, lambda: f64 },

    #[error("design matrix is numerically singular (pivot ratio {ratio:e})")]
    SingularDesign { ratio: f64 },

    #[error("line search exceeded L = {limit:e} at iteration {iteration}")]
    LineSearchOverflow { iteration: usize, limit: f64 },

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("distance to the solution is unknown; supply r0 or a reference optimum")]
    MissingRadius,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures a backtracking search absorbs by increasing `L`.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::ProxInfeasible { .. } | Error::DomainViolation { .. } | Error::NonFinite(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
