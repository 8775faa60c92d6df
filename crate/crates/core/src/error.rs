use thiserror::Error;

/// Failures surfaced by the numerical layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    /// Adaptive quadrature ran out of subdivisions. The partial estimate is kept
    /// so callers can decide whether it is good enough.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    NoConvergence { estimate: f64, error: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Unreadable or malformed input file.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
