use thiserror::Error;

use crate::scattering::WaveOpReport;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where the model or grid is valid.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration error: {0}")]
    Integration(String),

    /// Step halving ran out before the requested error target was met.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// The horizon-doubling sequence hit `k_max` with the last gap above tolerance.
    /// The full report is kept so callers can still inspect the gaps.
    #[error("wave operator not converged: last gap {last_gap:.3e} > tol {tol:.3e}")]
    Unconverged { last_gap: f64, tol: f64, report: Box<WaveOpReport> },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
