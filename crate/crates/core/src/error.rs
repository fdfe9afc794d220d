use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// The noise covariance built from an unraveling matrix is not positive
    /// semidefinite, i.e. the matrix norm exceeds one.
    #[error("unraveling constraint violated: spectral norm {norm} > 1")]
    ConstraintViolation { norm: f64 },

    #[error("simulation unstable at step {step} (t = {t}); try a smaller dt than {dt}")]
    Unstable { step: usize, t: f64, dt: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("truncation leak {leak:e} exceeds tolerance; enlarge n_max (currently {n_max})")]
    Truncation { leak: f64, n_max: usize },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
