//! Built-in self-checks: analytic identities of every module and
//! finite-system oracles at moderate dimension, on embedded parameter grids
//! and seeds.

use crate::error::{CliError, CliResult};
use rayon::prelude::*;
use sinr_core::als::{analyze_transient, als_stieltjes, AlsParams, ReceiverMode, TrainingKind};
use sinr_core::distributions::{ScalarDistribution, WindowSpec};
use sinr_core::mmse::{alternate_mmse_sinr, mmse_sinr, mmse_stieltjes, solve_mmse, MmseParams, SignatureKind};
use sinr_core::relation::{zeta_transient, zeta_transient_generic};
use sinr_core::C64;
use sinr_sim::{build_system, empirical_stieltjes, sample_covariance, ChannelPreset, TrialConfig};
use std::fmt;
use std::str::FromStr;

/// Which checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Exact identities of the large-system equations.
    Identities,
    /// Finite-system eigenvalue oracles.
    Oracles,
    /// Both.
    All,
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(name: &str) -> CliResult<Self> {
        match name {
            "identities" => Ok(Suite::Identities),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            other => Err(CliError::Config(format!(
                "unknown verification suite `{other}` (expected identities, oracles or all)"
            ))),
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Suite and check name.
    pub name: String,
    /// Worst residual observed.
    pub residual: f64,
    /// Largest acceptable residual.
    pub tolerance: f64,
    /// Details on failure (e.g. a solver error).
    pub note: Option<String>,
}

impl Check {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            residual,
            tolerance,
            note: None,
        }
    }

    fn failed(name: &str, tolerance: f64, error: impl fmt::Display) -> Self {
        Self {
            name: name.to_string(),
            residual: f64::INFINITY,
            tolerance,
            note: Some(error.to_string()),
        }
    }

    fn from_result(name: &str, tolerance: f64, result: sinr_core::Result<f64>) -> Self {
        match result {
            Ok(residual) => Self::new(name, residual, tolerance),
            Err(e) => Self::failed(name, tolerance, e),
        }
    }

    /// `true` when the residual is within tolerance.
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {:<40} residual {:.3e} (tolerance {:.1e})",
            self.name, self.residual, self.tolerance
        )?;
        if let Some(note) = &self.note {
            write!(f, ": {note}")?;
        }
        Ok(())
    }
}

/// Runs `suite` and returns every check.
pub fn run_suite(suite: Suite) -> Vec<Check> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        checks.extend(identity_checks());
    }
    if matches!(suite, Suite::Oracles | Suite::All) {
        checks.extend(oracle_checks());
    }
    checks
}

/// Runs and prints `suite`; fails if any check fails.
pub fn verify(suite: Suite) -> CliResult<Vec<Check>> {
    let checks = run_suite(suite);
    for check in &checks {
        println!("{check}");
    }
    let failures = checks.iter().filter(|c| !c.passed()).count();
    if failures > 0 {
        return Err(CliError::Verification(failures));
    }
    Ok(checks)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn worst(values: impl IntoIterator<Item = sinr_core::Result<f64>>) -> sinr_core::Result<f64> {
    values.into_iter().try_fold(0.0, |acc: f64, v| Ok(acc.max(v?)))
}

fn mmse_grid() -> Vec<MmseParams> {
    let mut grid = Vec::new();
    for alpha in [0.25, 0.75, 1.5] {
        for sigma2 in [0.05, 0.5] {
            for signature in [SignatureKind::Iid, SignatureKind::Isometric] {
                if signature == SignatureKind::Isometric && alpha > 1.0 {
                    continue;
                }
                for channel in [ScalarDistribution::point_mass(1.0), exponential(1.0)] {
                    grid.push(MmseParams {
                        alpha,
                        beta: 1.0,
                        sigma2,
                        power: two_level_power(),
                        channel,
                        signature,
                    });
                }
            }
        }
    }
    grid
}

fn exponential(mean: f64) -> ScalarDistribution {
    ScalarDistribution::exponential(mean).expect("positive mean")
}

fn two_level_power() -> ScalarDistribution {
    ScalarDistribution::point_masses(vec![1.0, 0.25], vec![0.75, 0.25]).expect("valid mixture")
}

fn als_grid() -> Vec<AlsParams> {
    let mut grid = Vec::new();
    for (alpha, eta) in [(0.5, 2.0), (0.5, 0.75), (1.5, 3.0)] {
        for window in [WindowSpec::Rectangular, WindowSpec::Exponential { lbar: 2.0 }] {
            for training in [TrainingKind::Iid, TrainingKind::Orthogonal] {
                for signature in [SignatureKind::Iid, SignatureKind::Isometric] {
                    if signature == SignatureKind::Isometric && alpha > 1.0 {
                        continue;
                    }
                    grid.push(AlsParams {
                        alpha,
                        beta: 1.0,
                        eta,
                        sigma2: 0.1,
                        mu: 0.1,
                        power: ScalarDistribution::point_mass(1.0),
                        channel: exponential(1.0),
                        window: window.clone(),
                        signature,
                        training,
                        mode: ReceiverMode::Training,
                    });
                }
            }
        }
    }
    grid
}

fn chain_defect(chain: &[C64]) -> f64 {
    let scale = chain[0].norm().max(1.0);
    chain[1..].iter().map(|v| (v - chain[0]).norm() / scale).fold(0.0, f64::max)
}

fn identity_checks() -> Vec<Check> {
    let mmse = mmse_grid();
    let tse_hanly = worst(
        [0.1, 0.5, 0.9]
            .into_iter()
            .flat_map(|alpha| [0.01, 0.1, 1.0].map(move |sigma2| (alpha, sigma2)))
            .map(|(alpha, sigma2)| {
                let params = MmseParams {
                    alpha,
                    beta: 1.0,
                    sigma2,
                    power: ScalarDistribution::point_mass(1.0),
                    channel: ScalarDistribution::point_mass(1.0),
                    signature: SignatureKind::Iid,
                };
                let rho = mmse_sinr(&params, 1.0)?;
                Ok((rho - 1.0 / (sigma2 + alpha / (1.0 + rho))).abs())
            }),
    );
    let mmse_chain = worst(mmse.iter().map(|p| {
        let solution = solve_mmse(p, C64::new(-p.sigma2, 0.0))?;
        Ok(solution.identity_defect(p))
    }));
    let mmse_alternate = worst(
        mmse.iter()
            .map(|p| Ok(relative(alternate_mmse_sinr(p, 1.0)?, mmse_sinr(p, 1.0)?))),
    );
    let als = als_grid();
    let als_chain = worst(als.par_iter().map(|p| {
        let analysis = analyze_transient(p)?;
        let (dim_k, dim_n) = analysis.first.identity_chain(p);
        Ok(chain_defect(&dim_k).max(chain_defect(&dim_n)))
    }).collect::<Vec<_>>());
    let laws = [
        two_level_power(),
        exponential(1.0),
        ScalarDistribution::empirical(vec![0.2, 1.3, 0.9, 2.5]).expect("valid samples"),
    ];
    let points = [
        C64::new(0.5, 0.0),
        C64::new(2.0, 0.0),
        C64::new(0.3, 0.8),
        C64::new(-0.2, 1.5),
    ];
    let window_identities = worst(laws.iter().flat_map(|law| {
        points.iter().flat_map(move |&x| {
            (0..=3).map(move |m| {
                let first = law.ratio_moment_1(m, x)?;
                let next = law.ratio_moment_1(m + 1, x)?;
                let plain = (C64::new(law.moment(m), 0.0) - (first + x * next)).norm();
                let squared = law.ratio_moment_2(m, x)?;
                let squared_next = law.ratio_moment_2(m + 1, x)?;
                let split = (first - (x.conj() * squared_next + squared)).norm();
                Ok(plain.max(split))
            })
        })
    }));
    let zeta = worst(
        [(0.5, 2.0), (1.0, 4.0), (2.0, 6.0)]
            .into_iter()
            .flat_map(|(beta, eta)| {
                [
                    WindowSpec::Rectangular,
                    WindowSpec::Exponential { lbar: 1.0 },
                    WindowSpec::Exponential { lbar: 5.0 },
                ]
                .map(move |w| (beta, eta, w))
            })
            .map(|(beta, eta, window)| {
                let closed = zeta_transient(beta, eta, &window)?.zeta;
                let generic = zeta_transient_generic(beta, eta, &window)?.zeta;
                Ok(relative(closed, generic))
            }),
    );
    vec![
        Check::from_result("identities/tse_hanly_fixed_point", 1e-10, tse_hanly),
        Check::from_result("identities/mmse_identity_chain", 1e-8, mmse_chain),
        Check::from_result("identities/mmse_alternate_sinr", 1e-8, mmse_alternate),
        Check::from_result("identities/als_identity_chains", 1e-8, als_chain),
        Check::from_result("identities/window_moment_identities", 1e-10, window_identities),
        Check::from_result("identities/zeta_closed_vs_generic", 1e-10, zeta),
    ]
}

const ORACLE_TRIALS: u64 = 4;
const ORACLE_SEED: u64 = 20_240_611;

fn presets() -> [(&'static str, ChannelPreset, f64); 3] {
    [
        ("rich_mimo", ChannelPreset::RichMimo, 0.5),
        ("cdma_rayleigh", ChannelPreset::CdmaRayleigh, 0.5),
        ("fir_cyclic", ChannelPreset::proakis_c(), 1.0),
    ]
}

/// Mean over trials of the empirical Stieltjes transform against the
/// large-system value, as a relative error.
fn stieltjes_oracle(name: &str, preset: ChannelPreset, alpha: f64, n: usize, als: bool, tolerance: f64) -> Check {
    let mut config = TrialConfig::new(preset, n, alpha);
    config.seed = ORACLE_SEED;
    config.sigma2 = 0.1;
    config.mu = 0.1;
    config.eta = 2.0;
    let point = C64::new(-config.sigma2, 0.05);
    let result = (|| -> Result<f64, String> {
        let predicted = if als {
            als_stieltjes(&config.als_params().map_err(|e| e.to_string())?, point)
        } else {
            mmse_stieltjes(&config.mmse_params().map_err(|e| e.to_string())?, point)
        }
        .map_err(|e| e.to_string())?;
        let samples: Vec<C64> = (0..ORACLE_TRIALS)
            .into_par_iter()
            .map(|trial| {
                let sys = build_system(&config, trial).map_err(|e| e.to_string())?;
                let matrix = if als {
                    sample_covariance(&sys, false)
                } else {
                    let hsa = sys.weighted_signatures();
                    &hsa * hsa.adjoint()
                };
                Ok(empirical_stieltjes(&matrix, point))
            })
            .collect::<Result<_, String>>()?;
        let mean = samples.iter().sum::<C64>() / samples.len() as f64;
        Ok((mean - predicted).norm() / predicted.norm())
    })();
    let label = format!("oracles/{}_stieltjes_{name}", if als { "als" } else { "mmse" });
    match result {
        Ok(residual) => Check::new(&label, residual, tolerance),
        Err(e) => Check::failed(&label, tolerance, e),
    }
}

fn oracle_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    for (name, preset, alpha) in presets() {
        checks.push(stieltjes_oracle(name, preset.clone(), alpha, 256, false, 0.02));
        checks.push(stieltjes_oracle(name, preset, alpha, 128, true, 0.03));
    }
    checks
}
