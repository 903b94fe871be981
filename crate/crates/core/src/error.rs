use thiserror::Error;

/// Errors raised by the numerical routines and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series did not converge within its term cap.
    #[error("series diverged in {context}: cap of {terms} terms reached, largest term magnitude {largest_term:e}")]
    Divergence {
        context: &'static str,
        terms: usize,
        largest_term: f64,
    },

    /// Quadrature or another numerical kernel failed to reach its tolerance.
    #[error("numerical failure in {context}: achieved error {achieved:e}")]
    Numeric {
        context: &'static str,
        achieved: f64,
    },

    /// Gaver-Stehfest weights blew up against the transform values.
    #[error("Laplace inversion unstable at t={t} (cancellation ratio {ratio:e}); retry with the Talbot contour")]
    InversionUnstable { t: f64, ratio: f64 },

    /// Parameters are valid but the simulator cannot represent the time change.
    #[error("unsupported simulation regime: {0}")]
    UnsupportedRegime(String),

    /// The subordinator did not cross the level before the step cap.
    #[error("first passage above level {level} not reached within {max_steps} grid steps")]
    Horizon { level: f64, max_steps: usize },

    /// A Gillespie path exceeded its jump cap.
    #[error("path exceeded the cap of {0} jumps")]
    PathCap(usize),

    /// A postcondition that should hold by construction was violated.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
