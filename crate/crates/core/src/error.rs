use thiserror::Error;

/// Errors raised by the numerical modules and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("field not localized: boundary value {boundary:.3e} exceeds {limit:.3e}")]
    NotLocalized { boundary: f64, limit: f64 },

    #[error("nonzero mean: |mean| = {mean:.3e} exceeds {limit:.3e}")]
    NonzeroMean { mean: f64, limit: f64 },

    #[error("solver failure after {iterations} iterations: residual {residual:.3e}")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("stability violation: delta'({c}) = {delta_prime:.6e} is not positive")]
    StabilityViolation { c: f64, delta_prime: f64 },

    #[error("coercivity violation: constrained minimum {rho:.6e} is not positive")]
    CoercivityViolation { rho: f64 },

    #[error("blow-up at t = {t}: max|u| = {max_abs:.3e}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("decomposition failed after {iterations} iterations: |G| = {residual:.3e}")]
    DecompositionFailure { iterations: usize, residual: f64 },

    #[error("speed parameter escaped [{min}, {max}]: c = {c}")]
    ParameterEscape { c: f64, min: f64, max: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
