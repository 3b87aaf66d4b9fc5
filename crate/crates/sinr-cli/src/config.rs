//! Run configuration: a JSON envelope naming the command plus a
//! command-specific parameter object, both validated strictly.

use crate::error::{CliError, CliResult};
use crate::output::Format;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sinr_core::als::{AlsParams, TrainingKind};
use sinr_core::mmse::{MmseParams, SignatureKind};
use sinr_core::throughput::BlockConfig;
use sinr_sim::TrialConfig;
use std::fmt;
use std::path::Path;

/// Batch commands that read a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    /// Large-system MMSE solution and SINR.
    Mmse,
    /// Transient (or steady-state) ALS solution and SINR.
    Als,
    /// ALS SINR versus training length.
    AlsSweep,
    /// Window-shape factor tables.
    Relation,
    /// Finite-system Monte Carlo.
    Simulate,
    /// Training-length throughput optimisation.
    Optimize,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CommandName::Mmse => "mmse",
            CommandName::Als => "als",
            CommandName::AlsSweep => "als-sweep",
            CommandName::Relation => "relation",
            CommandName::Simulate => "simulate",
            CommandName::Optimize => "optimize",
        };
        f.write_str(name)
    }
}

/// Top-level configuration file.
///
/// ```json
/// {"command": "mmse", "params": {...}, "output": "runs/mmse", "format": "csv"}
/// ```
///
/// `command` may be omitted (the sub-command on the command line decides);
/// if present it must agree with it. `params` is parsed against the
/// command's own schema, rejecting unknown fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Command this configuration is meant for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    /// Command-specific parameters.
    pub params: Value,
    /// Output path prefix (`<prefix>.csv`, `<prefix>.meta.json`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Data table format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Random seed (only the `simulate` command is random).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parses a configuration from JSON text.
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks that the file is meant for `command`.
    pub fn check_command(&self, command: CommandName) -> CliResult<()> {
        match self.command {
            Some(named) if named != command => Err(CliError::Config(format!(
                "config is for command `{named}` but `{command}` was invoked"
            ))),
            _ => Ok(()),
        }
    }

    /// Parses `params` into the command's parameter type.
    pub fn params_as<T: DeserializeOwned>(&self, command: CommandName) -> CliResult<T> {
        T::deserialize(&self.params).map_err(|e| CliError::Config(format!("invalid `{command}` params: {e}")))
    }
}

/// A list of grid values, given explicitly or as an evenly spaced range.
///
/// JSON forms: `[0.5, 1, 2]` or
/// `{"start": 0.5, "stop": 20, "count": 40, "spacing": "log"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    /// Explicit values.
    Values(Vec<f64>),
    /// Evenly spaced range including both ends.
    Range(GridRange),
}

/// Evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    /// First value.
    pub start: f64,
    /// Last value.
    pub stop: f64,
    /// Number of values (at least one).
    pub count: usize,
    /// Linear or logarithmic spacing.
    #[serde(default)]
    pub spacing: Spacing,
}

/// Spacing of a [`GridRange`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Constant difference between consecutive values.
    #[default]
    Linear,
    /// Constant ratio between consecutive values.
    Log,
}

impl Grid {
    /// Expands the grid into its values.
    pub fn values(&self) -> CliResult<Vec<f64>> {
        let values = match self {
            Grid::Values(v) => v.clone(),
            Grid::Range(range) => range.values()?,
        };
        if values.is_empty() {
            return Err(CliError::Config("grid must contain at least one value".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("grid value {bad} is not finite")));
        }
        Ok(values)
    }
}

impl GridRange {
    fn values(&self) -> CliResult<Vec<f64>> {
        if self.count == 0 {
            return Err(CliError::Config("grid count must be at least one".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let steps = (self.count - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..self.count)
                .map(|j| self.start + (self.stop - self.start) * j as f64 / steps)
                .collect()),
            Spacing::Log => {
                if !(self.start > 0.0 && self.stop > 0.0) {
                    return Err(CliError::Config("logarithmic grid needs positive end points".into()));
                }
                let ratio = (self.stop / self.start).ln();
                Ok((0..self.count)
                    .map(|j| self.start * (ratio * j as f64 / steps).exp())
                    .collect())
            }
        }
    }
}

fn unit_power() -> Vec<f64> {
    vec![1.0]
}

fn unit() -> f64 {
    1.0
}

/// Parameters of the `mmse` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmseJob {
    /// System description.
    pub system: MmseParams,
    /// Stream powers at which to report the SINR (default `[1]`).
    #[serde(default = "unit_power")]
    pub stream_powers: Vec<f64>,
}

/// Parameters of the `als` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlsJob {
    /// System description.
    pub system: AlsParams,
    /// Stream powers at which to report the SINR (default `[1]`).
    #[serde(default = "unit_power")]
    pub stream_powers: Vec<f64>,
    /// Evaluate the steady state (`eta -> infinity`) instead of the
    /// transient response at `system.eta`.
    #[serde(default)]
    pub steady_state: bool,
}

/// One signature/training combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Combination {
    /// Signature statistics.
    pub signature: SignatureKind,
    /// Training statistics.
    pub training: TrainingKind,
}

fn all_combinations() -> Vec<Combination> {
    let mut combos = Vec::with_capacity(4);
    for signature in [SignatureKind::Iid, SignatureKind::Isometric] {
        for training in [TrainingKind::Iid, TrainingKind::Orthogonal] {
            combos.push(Combination { signature, training });
        }
    }
    combos
}

/// Parameters of the `als-sweep` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlsSweepJob {
    /// System description; `eta`, `signature` and `training` are overridden
    /// by the sweep.
    pub system: AlsParams,
    /// Training lengths.
    pub etas: Grid,
    /// Stream power (default 1).
    #[serde(default = "unit")]
    pub stream_power: f64,
    /// Signature/training combinations (default: all four).
    #[serde(default = "all_combinations")]
    pub combinations: Vec<Combination>,
}

/// Parameters of the `relation` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationJob {
    /// Receive dimensions per transmit dimension.
    pub betas: Vec<f64>,
    /// Exponential window lengths.
    pub lbars: Grid,
    /// Training length; omitted for the steady state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

/// Parameters of the `simulate` command.
pub type SimulateJob = TrialConfig;

/// Parameters of the `optimize` command.
pub type OptimizeJob = BlockConfig;
