//! Error type shared by every analysis module.

use crate::C64;
use thiserror::Error;

/// Convenience alias for results carrying [`Error`].
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the large-system analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A distribution description is malformed (weights, support, emptiness).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    /// A parameter lies outside the domain where the model is defined.
    #[error("parameter out of domain: {0}")]
    Domain(String),
    /// An expectation has a pole on the support of its distribution.
    #[error("singular expectation: {0}")]
    Singularity(String),
    /// The problem has no well-defined solution for these parameters.
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    /// An iterative solver stopped before meeting its tolerance.
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        /// What was being solved.
        context: String,
        /// Iterations performed.
        iterations: usize,
        /// Residual norm at the best iterate.
        residual: f64,
        /// Best iterate found.
        best: Vec<C64>,
    },
}

impl Error {
    /// Returns `true` for the iterative-solver failure variant.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn with_context(self, prefix: &str) -> Self {
        match self {
            Error::NonConvergence {
                context,
                iterations,
                residual,
                best,
            } => Error::NonConvergence {
                context: format!("{prefix}: {context}"),
                iterations,
                residual,
                best,
            },
            other => other,
        }
    }
}
