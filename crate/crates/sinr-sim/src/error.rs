//! Error type of the simulator.

use thiserror::Error;

/// Convenience alias for results carrying [`SimError`].
pub type SimResult<T> = std::result::Result<T, SimError>;

/// Failure modes of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// Inconsistent trial configuration.
    #[error("invalid simulation config: {0}")]
    Config(String),
    /// A matrix that must be inverted is numerically singular.
    #[error("singular matrix: {0}")]
    Singular(String),
    /// Failure of the asymptotic reference computation.
    #[error("asymptotic reference failed: {0}")]
    Analysis(#[from] sinr_core::Error),
    /// A trial failed; carries the trial index.
    #[error("trial {trial}: {source}")]
    Trial {
        /// Index of the failing trial.
        trial: u64,
        /// Underlying failure.
        source: Box<SimError>,
    },
}
