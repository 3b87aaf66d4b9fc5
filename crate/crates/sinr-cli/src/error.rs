//! Error type of the front end and its mapping to process exit codes.

use sinr_core::Error as CoreError;
use sinr_sim::SimError;
use std::path::PathBuf;
use thiserror::Error;

/// Convenience alias for results carrying [`CliError`].
pub type CliResult<T> = std::result::Result<T, CliError>;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for I/O failures and failed verification checks.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for solver non-convergence (and numerically singular systems).
pub const EXIT_NON_CONVERGENCE: i32 = 2;
/// Exit status for malformed or invalid configurations.
pub const EXIT_CONFIG: i32 = 3;

/// Failure modes of a front-end run.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed, inconsistent or unreadable configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Failure of the large-system analysis.
    #[error("analysis failed: {0}")]
    Core(#[from] CoreError),
    /// Failure of the Monte Carlo simulator.
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    /// Writing an artifact failed.
    #[error("cannot write {path}: {source}")]
    Io {
        /// File being written.
        path: PathBuf,
        /// Underlying failure.
        source: std::io::Error,
    },
    /// At least one verification check failed.
    #[error("{0} verification check(s) failed")]
    Verification(usize),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => core_exit_code(e),
            CliError::Sim(e) => sim_exit_code(e),
            CliError::Io { .. } | CliError::Verification(_) => EXIT_FAILURE,
        }
    }
}

fn core_exit_code(error: &CoreError) -> i32 {
    match error {
        CoreError::InvalidDistribution(_) | CoreError::Domain(_) | CoreError::IllPosed(_) => EXIT_CONFIG,
        CoreError::Singularity(_) | CoreError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
    }
}

fn sim_exit_code(error: &SimError) -> i32 {
    match error {
        SimError::Config(_) => EXIT_CONFIG,
        SimError::Singular(_) => EXIT_NON_CONVERGENCE,
        SimError::Analysis(e) => core_exit_code(e),
        SimError::Trial { source, .. } => sim_exit_code(source),
    }
}
