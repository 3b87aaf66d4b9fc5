//! Batch front end for the large-system SINR analysis (`sinr-core`) and the
//! finite-system Monte Carlo simulator (`sinr-sim`).
//!
//! Every batch command reads a JSON [`config::RunConfig`], runs to
//! completion and writes two artifacts atomically: the data table
//! `<prefix>.csv` (or `<prefix>.json`) and `<prefix>.meta.json`, which holds
//! the fully resolved configuration, crate versions and seed. Failures leave
//! no artifacts behind and map to exit codes via [`CliError::exit_code`]:
//! `2` for solver non-convergence, `3` for configuration errors.
//!
//! ```
//! use sinr_cli::commands::execute;
//! use sinr_cli::config::{CommandName, RunConfig};
//!
//! let config = RunConfig::from_json(
//!     r#"{"command": "relation", "params": {"betas": [1.0], "lbars": [5.0], "eta": 10.0}}"#,
//! )
//! .unwrap();
//! let outcome = execute(CommandName::Relation, &config, None).unwrap();
//! assert_eq!(outcome.table.columns, ["beta", "eta", "lbar", "zeta", "zeta_poor_wang"]);
//! ```

pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod verify;

pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_FAILURE, EXIT_NON_CONVERGENCE, EXIT_OK};
