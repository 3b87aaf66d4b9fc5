//! Execution of the batch commands.

use crate::config::{AlsJob, AlsSweepJob, CommandName, MmseJob, OptimizeJob, RelationJob, RunConfig, SimulateJob};
use crate::error::{CliError, CliResult};
use crate::output::{write_artifacts, Cell, Format, Table};
use serde::Serialize;
use serde_json::{json, Value};
use sinr_core::als::{als_sweep, analyze_steady_state, analyze_transient, ReceiverMode};
use sinr_core::mmse::{alternate_mmse_sinr, mmse_sinr, solve_mmse};
use sinr_core::relation::zeta_table;
use sinr_core::throughput::optimize_training;
use sinr_core::{to_db, C64};
use sinr_sim::run_trials;
use std::path::{Path, PathBuf};

/// Result of a command before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Data table.
    pub table: Table,
    /// Parameters with every default filled in, as executed.
    pub resolved_params: Value,
    /// Seed actually used (random commands only).
    pub seed: Option<u64>,
    /// Command-level summary recorded in the metadata.
    pub summary: Option<Value>,
}

/// Options that apply to every batch command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    /// Output prefix overriding the configuration.
    pub out: Option<PathBuf>,
    /// Format overriding the configuration.
    pub format: Option<Format>,
    /// Seed overriding the configuration.
    pub seed: Option<u64>,
    /// Worker threads used (recorded in the metadata; 0 means default).
    pub threads: usize,
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("parameter types always serialise")
}

fn positive_powers(powers: &[f64]) -> CliResult<()> {
    if powers.is_empty() {
        return Err(CliError::Config("stream_powers must not be empty".into()));
    }
    match powers.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        Some(bad) => Err(CliError::Config(format!("stream power {bad} must be non-negative"))),
        None => Ok(()),
    }
}

fn mode_name(mode: ReceiverMode) -> &'static str {
    match mode {
        ReceiverMode::Training => "training",
        ReceiverMode::SemiBlind => "semi_blind",
    }
}

fn text<T: Serialize>(value: &T) -> Cell {
    match to_value(value) {
        Value::String(s) => Cell::Text(s),
        other => Cell::Text(other.to_string()),
    }
}

fn re(value: C64) -> Cell {
    Cell::Float(value.re)
}

/// Runs `command` on an already parsed configuration.
pub fn execute(command: CommandName, config: &RunConfig, seed: Option<u64>) -> CliResult<Outcome> {
    config.check_command(command)?;
    match command {
        CommandName::Mmse => run_mmse(config.params_as(command)?),
        CommandName::Als => run_als(config.params_as(command)?),
        CommandName::AlsSweep => run_sweep(config.params_as(command)?),
        CommandName::Relation => run_relation(config.params_as(command)?),
        CommandName::Simulate => run_simulate(config.params_as(command)?, seed.or(config.seed)),
        CommandName::Optimize => run_optimize(config.params_as(command)?),
    }
}

fn run_mmse(job: MmseJob) -> CliResult<Outcome> {
    positive_powers(&job.stream_powers)?;
    job.system.validate()?;
    let solution = solve_mmse(&job.system, C64::new(-job.system.sigma2, 0.0))?;
    let mut table = Table::new(&[
        "stream_power",
        "gamma",
        "rho",
        "tau",
        "sinr",
        "sinr_db",
        "sinr_alternate",
        "identity_defect",
    ]);
    let defect = solution.identity_defect(&job.system);
    for &power in &job.stream_powers {
        let sinr = mmse_sinr(&job.system, power)?;
        table.push(vec![
            power.into(),
            re(solution.gamma),
            re(solution.rho),
            re(solution.tau),
            sinr.into(),
            to_db(sinr).into(),
            alternate_mmse_sinr(&job.system, power)?.into(),
            defect.into(),
        ]);
    }
    Ok(Outcome {
        table,
        resolved_params: to_value(&job),
        seed: None,
        summary: None,
    })
}

fn run_als(job: AlsJob) -> CliResult<Outcome> {
    positive_powers(&job.stream_powers)?;
    let analysis = if job.steady_state {
        analyze_steady_state(&job.system)?
    } else {
        analyze_transient(&job.system)?
    };
    let mmse = job.system.mmse_equivalent();
    let first = analysis.first;
    let mut table = Table::new(&[
        "stream_power",
        "mode",
        "gamma",
        "rho",
        "tau",
        "psi",
        "omega",
        "r",
        "sinr",
        "sinr_db",
        "sinr_db_mmse",
    ]);
    for &power in &job.stream_powers {
        let sinr_mmse = mmse_sinr(&mmse, power)?;
        for mode in [ReceiverMode::Training, ReceiverMode::SemiBlind] {
            let sinr = analysis.sinr(mode, power)?.sinr;
            table.push(vec![
                power.into(),
                mode_name(mode).into(),
                re(first.gamma),
                re(first.rho),
                re(first.tau),
                re(first.psi),
                re(first.omega),
                re(first.r),
                sinr.into(),
                to_db(sinr).into(),
                to_db(sinr_mmse).into(),
            ]);
        }
    }
    Ok(Outcome {
        table,
        resolved_params: to_value(&job),
        seed: None,
        summary: None,
    })
}

fn run_sweep(job: AlsSweepJob) -> CliResult<Outcome> {
    if job.combinations.is_empty() {
        return Err(CliError::Config("combinations must not be empty".into()));
    }
    positive_powers(&[job.stream_power])?;
    let etas = job.etas.values()?;
    let mut table = Table::new(&[
        "signature",
        "training",
        "eta",
        "sinr_db_training",
        "sinr_db_semiblind",
        "sinr_db_mmse",
    ]);
    for combo in &job.combinations {
        let mut params = job.system.clone();
        params.signature = combo.signature;
        params.training = combo.training;
        for row in als_sweep(&params, &etas, job.stream_power)? {
            table.push(vec![
                text(&combo.signature),
                text(&combo.training),
                row.eta.into(),
                row.sinr_db_training.into(),
                row.sinr_db_semiblind.into(),
                row.sinr_db_mmse.into(),
            ]);
        }
    }
    Ok(Outcome {
        table,
        resolved_params: to_value(&job),
        seed: None,
        summary: None,
    })
}

fn run_relation(job: RelationJob) -> CliResult<Outcome> {
    if job.betas.is_empty() {
        return Err(CliError::Config("betas must not be empty".into()));
    }
    let lbars = job.lbars.values()?;
    let mut table = Table::new(&["beta", "eta", "lbar", "zeta", "zeta_poor_wang"]);
    for row in zeta_table(&job.betas, &lbars, job.eta)? {
        table.push(vec![
            row.beta.into(),
            row.eta.into(),
            row.lbar.into(),
            row.zeta.into(),
            row.zeta_poor_wang.into(),
        ]);
    }
    Ok(Outcome {
        table,
        resolved_params: to_value(&job),
        seed: None,
        summary: None,
    })
}

fn run_simulate(mut job: SimulateJob, seed: Option<u64>) -> CliResult<Outcome> {
    if let Some(seed) = seed {
        job.seed = seed;
    }
    let report = run_trials(&job)?;
    let mut table = Table::new(&["trial", "stream", "sinr_db_empirical", "sinr_db_asymptotic"]);
    for record in &report.records {
        table.push(vec![
            record.trial.into(),
            record.stream.into(),
            record.sinr_db_empirical.into(),
            record.sinr_db_asymptotic.into(),
        ]);
    }
    let summary = json!({
        "trials": job.trials,
        "mean_sinr": report.mean_sinr,
        "stderr_sinr": report.stderr_sinr,
        "mean_sinr_db": report.mean_sinr_db,
        "asymptotic_sinr": report.asymptotic_sinr,
        "asymptotic_sinr_db": report.asymptotic_sinr_db,
    });
    Ok(Outcome {
        table,
        resolved_params: to_value(&job),
        seed: Some(job.seed),
        summary: Some(summary),
    })
}

fn run_optimize(job: OptimizeJob) -> CliResult<Outcome> {
    let optimum = optimize_training(&job)?;
    let mut table = Table::new(&["eta", "capacity", "sinr", "sigma2", "rate_effective"]);
    for point in &optimum.curve {
        table.push(vec![
            point.eta.into(),
            point.capacity.into(),
            point.sinr.into(),
            point.sigma2.into(),
            point.rate_effective.into(),
        ]);
    }
    let summary = json!({
        "eta_star": optimum.eta_star,
        "capacity_star": optimum.capacity_star,
    });
    Ok(Outcome {
        table,
        resolved_params: to_value(&job),
        seed: None,
        summary: Some(summary),
    })
}

/// Default output prefix: the configuration path without its extension.
fn default_prefix(config_path: &Path) -> PathBuf {
    config_path.with_extension("")
}

/// Loads `config_path`, runs `command` and writes `<prefix>.<csv|json>` and
/// `<prefix>.meta.json`. Returns the written paths.
///
/// The metadata holds the fully resolved configuration (defaults filled in,
/// overrides applied) under `config`; feeding that object back as a
/// configuration file reproduces the data table exactly.
pub fn run_command(command: CommandName, config_path: &Path, options: &RunOptions) -> CliResult<Vec<PathBuf>> {
    let config = RunConfig::load(config_path)?;
    let format = options.format.or(config.format).unwrap_or_default();
    let prefix = options
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| default_prefix(config_path));
    let outcome = execute(command, &config, options.seed)?;
    let resolved = RunConfig {
        command: Some(command),
        params: outcome.resolved_params.clone(),
        output: Some(prefix.display().to_string()),
        format: Some(format),
        seed: outcome.seed,
    };
    let meta = json!({
        "tool": "sinr",
        "versions": {
            "sinr-cli": env!("CARGO_PKG_VERSION"),
            "sinr-core": sinr_core::VERSION,
            "sinr-sim": sinr_sim::VERSION,
        },
        "command": command.to_string(),
        "seed": outcome.seed,
        "threads": options.threads,
        "rows": outcome.table.rows.len(),
        "columns": outcome.table.columns,
        "config": to_value(&resolved),
        "summary": outcome.summary,
    });
    write_artifacts(&prefix, format, &outcome.table, &meta)
}
