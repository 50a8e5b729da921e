use thiserror::Error;

/// Failure modes shared by every routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Quadrature or estimator failed its tolerance; carries the best value reached.
    #[error("no convergence: best value {value:e}, error estimate {err_est:e}")]
    NonConvergence { value: f64, err_est: f64 },
    #[error("regime error: {0}")]
    RegimeError(String),
    #[error("the constant C must be supplied above the correlation boundary")]
    MissingConstant,
    #[error("degenerate drift: {0}")]
    DegenerateDrift(String),
    #[error("importance sampling degenerate: effective sample size {ess:.1}")]
    DegenerateIs { ess: f64 },
    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn require_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn require_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

pub(crate) fn require_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > -1.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("rho must lie in (-1, 1), got {rho}")))
    }
}
