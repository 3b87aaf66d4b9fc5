//! Training-length optimisation for block transmission.
//!
//! A block of `T = ell N` symbols starts with `i = eta N` training symbols;
//! the remaining symbols carry data coded at `R_c = log2(1 + SINR_als)`
//! (residual interference treated as Gaussian). The effective rate is
//! `R_eff = R_c (1 - eta/ell)` and the normalised capacity is either
//! `alpha R_eff` (per chip) or `R_eff` (per stream). The energy per
//! information bit `E_b / sigma^2 = SNR / R_eff` is held fixed, which makes
//! the noise level depend on the rate it produces; that coupling is resolved
//! by a damped fixed-point iteration.

use crate::als::{analyze_transient, AlsParams};
use crate::rootfind::{solve_1d, Bracket, SolveOptions};
use crate::{from_db, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How capacity is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityConvention {
    /// Bits per transmit dimension with `alpha` streams per dimension,
    /// `C = alpha R_eff`.
    PerChip,
    /// Bits per stream, `C = R_eff` (streams are the transmit dimensions).
    PerStream,
}

/// Block transmission set-up; `als.eta` is ignored (it is the free variable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    /// Receiver and channel description (`sigma2` is the starting guess only).
    pub als: AlsParams,
    /// Normalised block length `T / N`.
    pub ell: f64,
    /// Energy per information bit over noise, in dB.
    pub ebn0_db: f64,
    /// Capacity normalisation.
    pub convention: CapacityConvention,
}

impl BlockConfig {
    fn validate(&self) -> Result<()> {
        self.als.mmse_equivalent().validate()?;
        if !(self.ell.is_finite() && self.ell > 0.0) {
            return Err(Error::domain(format!("block length ell = {} must be positive", self.ell)));
        }
        if !self.ebn0_db.is_finite() {
            return Err(Error::domain("E_b/sigma^2 must be finite"));
        }
        Ok(())
    }
}

/// Capacity at one training length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityPoint {
    /// Normalised training length.
    pub eta: f64,
    /// Normalised capacity.
    pub capacity: f64,
    /// ALS output SINR at the self-consistent noise level.
    pub sinr: f64,
    /// Self-consistent noise variance.
    pub sigma2: f64,
    /// Effective rate in bits per symbol.
    pub rate_effective: f64,
}

/// Result of [`optimize_training`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingOptimum {
    /// Capacity-maximising training length.
    pub eta_star: f64,
    /// Capacity at `eta_star`.
    pub capacity_star: f64,
    /// Grid samples `(eta, C)` used to locate the optimum.
    pub curve: Vec<CapacityPoint>,
}

/// Relative tolerance on the self-consistent noise variance.
const NOISE_TOLERANCE: f64 = 1e-9;
/// Rates below this are treated as a collapse to zero throughput.
const COLLAPSED_RATE: f64 = 1e-9;
/// Initial rate guess in bits; above any attainable rate so that the
/// monotone iteration settles on the largest self-consistent solution.
const RATE_CEILING: f64 = 30.0;

/// Normalised capacity at training length `eta` (`0 < eta < ell`).
pub fn normalized_capacity(config: &BlockConfig, eta: f64) -> Result<CapacityPoint> {
    config.validate()?;
    if !(eta > 0.0 && eta < config.ell) {
        return Err(Error::domain(format!(
            "training length eta = {eta} must lie in (0, ell = {})",
            config.ell
        )));
    }
    let ebn0 = from_db(config.ebn0_db);
    let power = config.als.power.mean();
    let data_fraction = 1.0 - eta / config.ell;
    let mut params = AlsParams {
        eta,
        ..config.als.clone()
    };
    let rate_at = |params: &AlsParams| -> Result<(f64, f64)> {
        let sinr = analyze_transient(params)?.sinr(params.mode, power)?.sinr;
        Ok((sinr, (1.0 + sinr).log2() * data_fraction))
    };
    let finish = |params: &mut AlsParams, sigma2: f64| -> Result<CapacityPoint> {
        params.sigma2 = sigma2;
        let (sinr, rate) = rate_at(params)?;
        let capacity = match config.convention {
            CapacityConvention::PerChip => config.als.alpha * rate,
            CapacityConvention::PerStream => rate,
        };
        Ok(CapacityPoint {
            eta,
            capacity,
            sinr,
            sigma2,
            rate_effective: rate,
        })
    };
    // The map sigma2 -> E_P / (E_b/sigma^2 R_eff(sigma2)) is increasing, so
    // iterating it from below converges monotonically to its smallest fixed
    // point (the largest self-consistent rate). Secant extrapolation speeds up
    // the slow approach near a tangency; once a step overshoots, the fixed
    // point is bracketed and solved for directly.
    let collapse_level = power / (ebn0 * COLLAPSED_RATE);
    // Scale-free defect target / sigma2 - 1 and the rate behind it.
    let defect = |params: &mut AlsParams, sigma2: f64| -> Result<(f64, f64, f64)> {
        params.sigma2 = sigma2;
        let (sinr, rate) = rate_at(params)?;
        Ok((power / (ebn0 * rate) / sigma2 - 1.0, sinr, rate))
    };
    let mut sigma2 = power / (ebn0 * RATE_CEILING);
    let mut previous: Option<(f64, f64)> = None;
    let max_iterations = 2000;
    for _ in 0..max_iterations {
        let (g, sinr, rate) = defect(&mut params, sigma2)?;
        if rate <= COLLAPSED_RATE || sigma2 >= collapse_level {
            return Ok(CapacityPoint {
                eta,
                capacity: 0.0,
                sinr,
                sigma2,
                rate_effective: 0.0,
            });
        }
        if g.abs() <= NOISE_TOLERANCE {
            return finish(&mut params, sigma2 * (1.0 + g));
        }
        let plain = sigma2 * (1.0 + g);
        let next = match previous {
            Some((x0, g0)) if g0 > g && g > 0.0 => {
                let secant = sigma2 - g * (sigma2 - x0) / (g - g0);
                secant.clamp(plain, sigma2 + 100.0 * (plain - sigma2))
            }
            _ => plain,
        };
        if next > plain {
            let (g_next, _, _) = defect(&mut params, next)?;
            if g_next < 0.0 {
                let mut probe = params.clone();
                let root = solve_1d(
                    |x| defect(&mut probe, x).map(|d| d.0),
                    Bracket::Interval(sigma2, next),
                    SolveOptions {
                        tolerance: NOISE_TOLERANCE,
                        max_iterations: 200,
                    },
                )?;
                return finish(&mut params, root.root[0].re);
            }
        }
        previous = Some((sigma2, g));
        sigma2 = next;
    }
    Err(Error::NonConvergence {
        context: "rate / noise-level coupling".into(),
        iterations: max_iterations,
        residual: f64::NAN,
        best: Vec::new(),
    })
}

/// Grid size for the initial scan.
const GRID_POINTS: usize = 64;
/// Absolute tolerance on the optimal training length.
const ETA_TOLERANCE: f64 = 1e-3;

/// Maximises the normalised capacity over the training length: a parallel
/// grid scan over the feasible range followed by golden-section refinement
/// around the best grid point.
pub fn optimize_training(config: &BlockConfig) -> Result<TrainingOptimum> {
    config.validate()?;
    let lower = if config.als.mu == 0.0 {
        // The unloaded receiver needs eta > beta.
        config.als.beta + 1e-3 * config.ell
    } else {
        1e-3 * config.ell
    };
    let upper = config.ell * (1.0 - 1e-3);
    if lower >= upper {
        return Err(Error::domain(format!(
            "no feasible training length: need beta = {} < ell = {}",
            config.als.beta, config.ell
        )));
    }
    let step = (upper - lower) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| lower + step * k as f64).collect();
    let evaluated: Vec<Result<CapacityPoint>> =
        grid.par_iter().map(|&eta| normalized_capacity(config, eta)).collect();
    let mut curve = Vec::with_capacity(GRID_POINTS);
    let mut last_error = None;
    for point in evaluated {
        match point {
            Ok(p) => curve.push(p),
            Err(e) => last_error = Some(e),
        }
    }
    if curve.is_empty() {
        return Err(last_error.unwrap_or_else(|| Error::IllPosed("empty training grid".into())));
    }
    let best = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.capacity.total_cmp(&b.1.capacity))
        .map(|(k, _)| k)
        .expect("non-empty curve");
    let left = if best > 0 { curve[best - 1].eta } else { curve[best].eta };
    let right = if best + 1 < curve.len() { curve[best + 1].eta } else { curve[best].eta };
    let (eta_star, capacity_star) = golden_section_max(
        |eta| normalized_capacity(config, eta).map(|p| p.capacity).unwrap_or(f64::NEG_INFINITY),
        left,
        right,
        ETA_TOLERANCE,
    );
    // Never report less than the best sampled point.
    let (eta_star, capacity_star) = if capacity_star >= curve[best].capacity {
        (eta_star, capacity_star)
    } else {
        (curve[best].eta, curve[best].capacity)
    };
    Ok(TrainingOptimum {
        eta_star,
        capacity_star,
        curve,
    })
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tolerance: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    if b - a <= tolerance {
        let x = 0.5 * (a + b);
        return (x, f(x));
    }
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 1.3).powi(2) + 2.0, 0.0, 3.0, 1e-6);
        assert!((x - 1.3).abs() < 1e-5);
        assert!((fx - 2.0).abs() < 1e-9);
    }
}
