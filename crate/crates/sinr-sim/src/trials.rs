//! Parallel, reproducible trial runner.

use crate::receivers::{als_filter_empirical, mmse_filter_empirical};
use crate::system::{build_system, Receiver, TrialConfig};
use crate::{SimError, SimResult};
use rayon::prelude::*;
use serde::Serialize;
use sinr_core::als::als_transient_sinr;
use sinr_core::mmse::mmse_sinr;
use sinr_core::to_db;

/// SINR of one stream in one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrRecord {
    /// Trial index.
    pub trial: u64,
    /// Stream index.
    pub stream: usize,
    /// Realised output SINR in dB.
    pub sinr_db_empirical: f64,
    /// Large-system prediction for this stream's power, in dB.
    pub sinr_db_asymptotic: f64,
}

/// Summary of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrReport {
    /// Per-trial, per-stream records in trial order.
    pub records: Vec<SinrRecord>,
    /// Mean linear SINR over all trials and streams.
    pub mean_sinr: f64,
    /// Standard error of `mean_sinr` (from the per-trial means).
    pub stderr_sinr: f64,
    /// `mean_sinr` in dB.
    pub mean_sinr_db: f64,
    /// Large-system prediction averaged (linearly) over streams.
    pub asymptotic_sinr: f64,
    /// `asymptotic_sinr` in dB.
    pub asymptotic_sinr_db: f64,
}

/// Runs `config.trials` independent trials in parallel and attaches the
/// matching large-system prediction.
pub fn run_trials(config: &TrialConfig) -> SimResult<SinrReport> {
    config.validate()?;
    if config.trials == 0 {
        return Err(SimError::Config("need at least one trial".into()));
    }
    let (n, _, _, i) = config.dimensions();
    let first = build_system(config, 0)?;
    let powers: Vec<f64> = first.amplitudes.iter().map(|a| a * a).collect();
    let predictions = asymptotic_per_stream(config, &powers, i as f64 / n as f64)?;

    let per_trial: Vec<SimResult<Vec<f64>>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let sys = build_system(config, trial)?;
            match config.receiver {
                Receiver::Mmse => mmse_filter_empirical(&sys),
                Receiver::Als => als_filter_empirical(&sys),
            }
            .map_err(|e| SimError::Trial {
                trial,
                source: Box::new(e),
            })
        })
        .collect();

    let mut records = Vec::new();
    let mut trial_means = Vec::with_capacity(per_trial.len());
    for (trial, result) in per_trial.into_iter().enumerate() {
        let sinrs = result?;
        trial_means.push(sinrs.iter().sum::<f64>() / sinrs.len() as f64);
        records.extend(sinrs.iter().enumerate().map(|(stream, &s)| SinrRecord {
            trial: trial as u64,
            stream,
            sinr_db_empirical: to_db(s),
            sinr_db_asymptotic: to_db(predictions[stream]),
        }));
    }
    let count = trial_means.len() as f64;
    let mean = trial_means.iter().sum::<f64>() / count;
    let stderr = if trial_means.len() > 1 {
        let var = trial_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        f64::NAN
    };
    let asymptotic = predictions.iter().sum::<f64>() / predictions.len() as f64;
    Ok(SinrReport {
        records,
        mean_sinr: mean,
        stderr_sinr: stderr,
        mean_sinr_db: to_db(mean),
        asymptotic_sinr: asymptotic,
        asymptotic_sinr_db: to_db(asymptotic),
    })
}

/// Large-system SINR for each stream power, evaluated once per distinct
/// power level; ALS predictions use the realised training length `eta`.
fn asymptotic_per_stream(config: &TrialConfig, powers: &[f64], eta: f64) -> SimResult<Vec<f64>> {
    let mut levels: Vec<f64> = powers.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let values: Vec<f64> = match config.receiver {
        Receiver::Mmse => {
            let params = config.mmse_params()?;
            levels.iter().map(|&p| mmse_sinr(&params, p)).collect::<Result<_, _>>()?
        }
        Receiver::Als => {
            let mut params = config.als_params()?;
            params.eta = eta;
            levels
                .iter()
                .map(|&p| als_transient_sinr(&params, p).map(|s| s.sinr))
                .collect::<Result<_, _>>()?
        }
    };
    Ok(powers
        .iter()
        .map(|p| {
            let j = levels.iter().position(|l| l == p).expect("level present");
            values[j]
        })
        .collect())
}
