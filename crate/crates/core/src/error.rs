use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver ran out of iterations or lost its bracket.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Parameters do not sit in the requested asymptotic regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// A denominator vanished inside a recursion.
    #[error("numerical singularity: {0}")]
    Singular(String),

    /// NaN or infinity appeared in a state vector.
    #[error("non-finite value at tau = {tau}: {what}")]
    NonFinite { what: String, tau: f64 },

    /// The field is too small for its phase to be meaningful.
    #[error("field magnitude {magnitude:e} below {threshold:e} at sample {index}; phase undefined")]
    UndefinedPhase {
        index: usize,
        magnitude: f64,
        threshold: f64,
    },

    /// A fixed-point iteration left the region where its map is defined.
    #[error("iteration left its domain: {0}")]
    DomainExit(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
