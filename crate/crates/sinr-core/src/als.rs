//! Large-system analysis of the adaptive least-squares (ALS) receiver.
//!
//! The receiver estimates its filter from `i = eta N` received training
//! intervals collected in `Y = H S A B^† + N`, using the windowed sample
//! covariance `R = (1/i) Y W Y^† + (mu/eta) I` and either the cross-correlation
//! with the known training symbols (training mode) or the true signature
//! (semi-blind mode).
//!
//! The first-order system involves seven coupled scalars (`gamma`, `rho`,
//! `tau`, `psi`, `omega`, `nu`, `r`) evaluated at `z = -mu/eta`; the SINR
//! additionally needs second-order quantities which, given the first-order
//! solution, satisfy three *linear* systems solved in sequence:
//!
//! 1. the noise-weighted set (`R^{-†} R^{-1}`),
//! 2. the channel-weighted set (`R^{-†} H H^† R^{-1}`), and
//! 3. the interference-weighted set (`R^{-†} (HSA)(HSA)^† R^{-1}`).
//!
//! The steady state (`eta -> infinity` with a fixed-length window) reuses the
//! same equations with rescaled window moments.

use crate::distributions::{
    steady_exponential_moments, window_distribution, ScalarDistribution, WindowLaw, WindowMoments,
    WindowSpec,
};
use crate::mmse::{solve_mmse, MmseParams, SignatureKind};
use crate::rootfind::{
    damped_fixed_point, expand_bracket, solve_1d, solve_newton, Bracket, JacobianKind, SolveOptions,
};
use crate::{to_db, Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Statistics of the training symbol matrix `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingKind {
    /// Independent identically distributed symbols.
    Iid,
    /// Orthogonal training sequences (Haar rows or columns, scaled).
    Orthogonal,
}

/// How the ALS filter obtains its cross-correlation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverMode {
    /// Cross-correlation with known training symbols.
    Training,
    /// True effective signature of the desired stream (semi-blind).
    SemiBlind,
}

/// System description for the ALS analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlsParams {
    /// Streams per transmit dimension, `K / N`.
    pub alpha: f64,
    /// Receive dimensions per transmit dimension, `M / N`.
    pub beta: f64,
    /// Training intervals per transmit dimension, `i / N`.
    pub eta: f64,
    /// Noise variance per receive dimension.
    pub sigma2: f64,
    /// Diagonal loading constant (the covariance is loaded by `mu / eta`).
    pub mu: f64,
    /// Limiting distribution of the stream powers.
    pub power: ScalarDistribution,
    /// Limiting distribution of the non-zero eigenvalues of `H H^†`.
    pub channel: ScalarDistribution,
    /// Data window.
    pub window: WindowSpec,
    /// Signature statistics.
    pub signature: SignatureKind,
    /// Training sequence statistics.
    pub training: TrainingKind,
    /// Filter construction.
    pub mode: ReceiverMode,
}

impl AlsParams {
    /// `min(beta, 1)`.
    pub fn beta_star(&self) -> f64 {
        self.beta.min(1.0)
    }

    /// `max(eta, alpha)`.
    pub fn eta_star(&self) -> f64 {
        self.eta.max(self.alpha)
    }

    /// The MMSE system with the same signatures, powers, channel and noise.
    pub fn mmse_equivalent(&self) -> MmseParams {
        MmseParams {
            alpha: self.alpha,
            beta: self.beta,
            sigma2: self.sigma2,
            power: self.power.clone(),
            channel: self.channel.clone(),
            signature: self.signature,
        }
    }

    /// Checks the parameter domain.
    pub fn validate(&self) -> Result<()> {
        self.mmse_equivalent().validate()?;
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::domain(format!("eta = {} must be positive", self.eta)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::domain(format!("mu = {} must be non-negative", self.mu)));
        }
        Ok(())
    }
}

/// Window moments as a function of the coupling `r`.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowModel {
    /// Finite training length: moments of the limiting window law.
    Transient(WindowLaw),
    /// Infinite training length with a fixed-length exponential window:
    /// moments rescaled by `eta`.
    SteadyExponential {
        /// Normalised effective window length.
        lbar: f64,
    },
}

impl WindowModel {
    fn moments(&self, r: C64) -> Result<WindowMoments> {
        match self {
            Self::Transient(law) => law.moments(r),
            Self::SteadyExponential { lbar } => steady_exponential_moments(*lbar, r),
        }
    }
}

/// Scalar problem shared by the transient and steady-state analyses.
#[derive(Clone, Copy)]
struct Problem<'a> {
    alpha: f64,
    beta: f64,
    beta_star: f64,
    eta: f64,
    eta_star: f64,
    sigma2: f64,
    point: C64,
    signature: SignatureKind,
    training: TrainingKind,
    power: &'a ScalarDistribution,
    channel: &'a ScalarDistribution,
    window: &'a WindowModel,
    mean_power: f64,
}

impl<'a> Problem<'a> {
    fn transient(params: &'a AlsParams, window: &'a WindowModel, point: C64) -> Self {
        Self {
            alpha: params.alpha,
            beta: params.beta,
            beta_star: params.beta_star(),
            eta: params.eta,
            eta_star: params.eta_star(),
            sigma2: params.sigma2,
            point,
            signature: params.signature,
            training: params.training,
            power: &params.power,
            channel: &params.channel,
            window,
            mean_power: params.power.mean(),
        }
    }

    fn steady(params: &'a AlsParams, window: &'a WindowModel) -> Self {
        // Infinite training: i.i.d. training relations, unit eta, z = -mu.
        Self {
            alpha: params.alpha,
            beta: params.beta,
            beta_star: params.beta_star(),
            eta: 1.0,
            eta_star: 1.0f64.max(params.alpha),
            sigma2: params.sigma2,
            point: C64::new(-params.mu, 0.0),
            signature: params.signature,
            training: TrainingKind::Iid,
            power: &params.power,
            channel: &params.channel,
            window,
            mean_power: params.power.mean(),
        }
    }

    fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            eta_star: self.eta.max(alpha),
            ..*self
        }
    }

    fn pinned(&self) -> bool {
        self.point == C64::new(0.0, 0.0)
    }

    /// Whether `eta (1 - W01(r)) = beta` has a solution: transient windows
    /// have `r W11 < 1`, while the rescaled steady-state moments are unbounded.
    fn coupling_can_be_pinned(&self) -> bool {
        match self.window {
            WindowModel::Transient(_) => self.eta > self.beta,
            WindowModel::SteadyExponential { .. } => true,
        }
    }
}

/// First-order ALS solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsFirstOrder {
    /// Limiting normalised trace of the inverse sample covariance.
    pub gamma: C64,
    /// Channel-weighted trace.
    pub rho: C64,
    /// Transmit-dimension companion variable.
    pub tau: C64,
    /// Training cross-correlation variable.
    pub psi: C64,
    /// Data-interval companion variable.
    pub omega: C64,
    /// Receive-dimension companion variable.
    pub nu: C64,
    /// Window coupling.
    pub r: C64,
    /// Spectral argument.
    pub point: C64,
    /// Window moments at `r`.
    pub window: WindowMoments,
    /// Argument `-rho (psi - E[W])` of the power moments.
    pub power_argument: C64,
    /// `[Ea_{0,1}, Ea_{1,1}]`.
    pub power_moments: [C64; 2],
    /// Argument `-nu (tau - alpha E[P] E[W])` of the channel moments.
    pub channel_argument: C64,
    /// `[Ha_{0,1}, Ha_{1,1}]`.
    pub channel_moments: [C64; 2],
}

/// One set of second-order quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondOrderSet {
    /// Window coupling.
    pub r: C64,
    /// Normalised trace.
    pub gamma: C64,
    /// Receive-dimension companion (not defined for the interference set).
    pub nu: C64,
    /// Channel-weighted trace.
    pub rho: C64,
    /// Transmit-dimension companion (not defined for the interference set).
    pub tau: C64,
    /// Training cross-correlation term.
    pub psi: C64,
    /// Data-interval term.
    pub omega: C64,
}

/// Second-order ALS quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsSecondOrder {
    /// Noise-weighted set.
    pub noise: SecondOrderSet,
    /// Channel-weighted set.
    pub channel: SecondOrderSet,
    /// Interference-weighted set (`nu` and `tau` unused).
    pub interference: SecondOrderSet,
    /// Residual norm of the (over-determined) noise-set system.
    pub consistency: f64,
}

/// Complete asymptotic ALS analysis for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsAnalysis {
    /// First-order solution.
    pub first: AlsFirstOrder,
    /// Second-order solution.
    pub second: AlsSecondOrder,
}

/// Output SINR of one stream and its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlsSinr {
    /// Output SINR (linear).
    pub sinr: f64,
    /// Useful signal power `P |a1|^2 |rho|^2`.
    pub signal: f64,
    /// Interference-plus-noise power carried by the `a1` term.
    pub distortion_a1: f64,
    /// Interference-plus-noise power carried by the `a2` term.
    pub distortion_a2: f64,
}

impl AlsAnalysis {
    /// Output SINR of a stream with power `stream_power`.
    pub fn sinr(&self, mode: ReceiverMode, stream_power: f64) -> Result<AlsSinr> {
        if !(stream_power.is_finite() && stream_power >= 0.0) {
            return Err(Error::domain(format!("stream power {stream_power} must be non-negative")));
        }
        let amplitude = stream_power.sqrt();
        let first = &self.first;
        let one = C64::new(1.0, 0.0);
        let (a1, a2) = match mode {
            ReceiverMode::SemiBlind => (one, -first.rho * amplitude),
            ReceiverMode::Training => ((C64::new(first.window.mean, 0.0) - first.psi) * amplitude, one),
        };
        let sigma2 = self.noise_variance();
        let rho_part = self.second.interference.rho + self.second.noise.rho * sigma2;
        let psi_part = self.second.interference.psi + self.second.noise.psi * sigma2;
        let signal = stream_power * a1.norm_sqr() * first.rho.norm_sqr();
        let distortion_a1 = a1.norm_sqr() * rho_part.re;
        let distortion_a2 = a2.norm_sqr() * psi_part.re;
        let denominator = distortion_a1 + distortion_a2;
        if denominator.is_nan() || denominator <= 0.0 {
            if signal == 0.0 {
                return Ok(AlsSinr {
                    sinr: 0.0,
                    signal,
                    distortion_a1,
                    distortion_a2,
                });
            }
            return Err(Error::Singularity(format!(
                "degenerate SINR denominator {denominator:e}"
            )));
        }
        Ok(AlsSinr {
            sinr: signal / denominator,
            signal,
            distortion_a1,
            distortion_a2,
        })
    }

    fn noise_variance(&self) -> f64 {
        // nu = 1 / (sigma^2 W11 - z)  =>  sigma^2 = (1/nu + z) / W11.
        ((self.first.nu.inv() + self.first.point) / self.first.window.w11).re
    }
}

impl AlsFirstOrder {
    /// Identity-chain terms:
    /// `[beta(1 + z gamma), eta(1 - W01)]` and
    /// `[beta(1 - gamma/nu), eta omega W11, alpha(1 - Ea01),
    ///   -alpha rho (psi - E[W]) Ea11, beta*(1 - Ha01),
    ///   -nu (tau - alpha E[P] E[W]) beta* Ha11]`.
    pub fn identity_chain(&self, params: &AlsParams) -> ([C64; 2], [C64; 6]) {
        let one = C64::new(1.0, 0.0);
        let eta = params.eta;
        let ew = self.window.mean;
        let bs = params.beta_star();
        let mean_power = params.power.mean();
        let first = [
            (one + self.point * self.gamma) * params.beta,
            (one - self.window.w01) * eta,
        ];
        let second = [
            (one - self.gamma / self.nu) * params.beta,
            self.omega * self.window.w11 * eta,
            (one - self.power_moments[0]) * params.alpha,
            -self.rho * (self.psi - ew) * self.power_moments[1] * params.alpha,
            (one - self.channel_moments[0]) * bs,
            -self.nu * (self.tau - params.alpha * mean_power * ew) * self.channel_moments[1] * bs,
        ];
        (first, second)
    }

    /// Residual of `gamma = nu (1 + (alpha/beta) rho (psi - E[W]) Ea11)`.
    pub fn gamma_equation_residual(&self, params: &AlsParams) -> f64 {
        let rhs = self.nu
            * (C64::new(1.0, 0.0)
                + self.rho * (self.psi - self.window.mean) * self.power_moments[1] * (params.alpha / params.beta));
        (self.gamma - rhs).norm()
    }
}

/// Evaluates all first-order variables from `(rho, r, gamma)`.
fn state(problem: &Problem, rho: C64, r: C64, gamma: C64) -> Result<AlsFirstOrder> {
    let one = C64::new(1.0, 0.0);
    let window = problem.window.moments(r)?;
    let nu = (window.w11 * problem.sigma2 - problem.point).inv();
    let loading = one - gamma / nu;
    let ds = match problem.signature {
        SignatureKind::Iid => one,
        SignatureKind::Isometric => one - loading * problem.beta,
    };
    let db = match problem.training {
        TrainingKind::Iid => one,
        TrainingKind::Orthogonal => one - loading * (problem.beta / problem.eta_star),
    };
    let ew = window.mean;
    let psi = C64::new(ew, 0.0) - window.w11 / db;
    let power_argument = -rho * (psi - ew);
    let power_moments = problem.power.first_order_moments(power_argument)?;
    let omega = rho * power_moments[1] * (problem.alpha / problem.eta) / db;
    let tau = problem.alpha * problem.mean_power * ew + (psi - ew) * power_moments[1] * problem.alpha / ds;
    let channel_argument = -nu * (tau - problem.alpha * problem.mean_power * ew);
    let channel_moments = problem.channel.first_order_moments(channel_argument)?;
    Ok(AlsFirstOrder {
        gamma,
        rho,
        tau,
        psi,
        omega,
        nu,
        r,
        point: problem.point,
        window,
        power_argument,
        power_moments,
        channel_argument,
        channel_moments,
    })
}

fn rho_residual(problem: &Problem, s: &AlsFirstOrder) -> C64 {
    let one = C64::new(1.0, 0.0);
    let ds = match problem.signature {
        SignatureKind::Iid => one,
        SignatureKind::Isometric => one - (one - s.gamma / s.nu) * problem.beta,
    };
    relative_difference(s.rho * ds, s.nu * s.channel_moments[1] * problem.beta_star)
}

/// `(a - b) / (|a| + |b|)`: residuals stay scale-free because the natural
/// magnitude of the unknowns grows with the training length.
fn relative_difference(a: C64, b: C64) -> C64 {
    let scale = a.norm() + b.norm();
    if scale == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        (a - b) / scale
    }
}

/// Residuals of the loaded formulation with unknowns `(rho, r, gamma)`.
fn loaded_residuals(problem: &Problem, x: &[C64]) -> Result<Vec<C64>> {
    let s = state(problem, x[0], x[1], x[2])?;
    let one = C64::new(1.0, 0.0);
    Ok(vec![
        rho_residual(problem, &s),
        relative_difference(s.r, s.omega + s.gamma * (problem.sigma2 * problem.beta / problem.eta)),
        relative_difference((one + problem.point * s.gamma) * problem.beta, s.r * s.window.w11 * problem.eta),
    ])
}

/// State of the unloaded formulation: `r` pinned, unknowns `(rho, omega)`.
fn unloaded_state(problem: &Problem, r: C64, x: &[C64]) -> Result<AlsFirstOrder> {
    let window = problem.window.moments(r)?;
    let nu = (window.w11 * problem.sigma2 - problem.point).inv();
    let gamma = nu * (C64::new(1.0, 0.0) - x[1] * window.w11 * (problem.eta / problem.beta));
    state(problem, x[0], r, gamma)
}

fn unloaded_residuals(problem: &Problem, r: C64, x: &[C64]) -> Result<Vec<C64>> {
    let s = unloaded_state(problem, r, x)?;
    Ok(vec![rho_residual(problem, &s), relative_difference(s.omega, x[1])])
}

/// Window coupling fixed by `eta (1 - W01) = beta` when there is no loading.
fn pinned_coupling(problem: &Problem) -> Result<f64> {
    let target = problem.beta / problem.eta;
    let f = |r: f64| -> Result<f64> {
        let w = problem.window.moments(C64::new(r, 0.0))?;
        Ok((w.w11 * r).re - target)
    };
    let (lo, hi) = expand_bracket(f, 0.0, 1e6, 60)?;
    let report = solve_1d(
        f,
        Bracket::Interval(lo, hi),
        SolveOptions {
            tolerance: 1e-16,
            max_iterations: 400,
        },
    )?;
    Ok(report.root[0].re)
}

/// Tolerance on the scale-free first-order residuals; tight because the
/// second-order systems inherit the first-order error.
const FIRST_ORDER_TOLERANCE: f64 = 1e-13;

fn newton(f: impl FnMut(&[C64]) -> Result<Vec<C64>>, seed: &[C64]) -> Result<Vec<C64>> {
    newton_to(f, seed, FIRST_ORDER_TOLERANCE)
}

fn newton_to(f: impl FnMut(&[C64]) -> Result<Vec<C64>>, seed: &[C64], tolerance: f64) -> Result<Vec<C64>> {
    let opts = SolveOptions {
        tolerance,
        ..SolveOptions::default()
    };
    solve_newton(f, seed, JacobianKind::Holomorphic, opts).map(|r| r.root)
}

/// Seed derived from the MMSE solution through the unloaded i.i.d.-training
/// equivalence `W11 gamma_als = gamma_mmse`, `W11 rho_als = rho_mmse`.
fn mmse_seed(problem: &Problem, r: f64) -> Result<(C64, C64, C64)> {
    let mmse = MmseParams {
        alpha: problem.alpha,
        beta: problem.beta,
        sigma2: problem.sigma2,
        power: problem.power.clone(),
        channel: problem.channel.clone(),
        signature: problem.signature,
    };
    let solution = solve_mmse(&mmse, C64::new(-problem.sigma2, 0.0))?;
    let w = problem.window.moments(C64::new(r, 0.0))?;
    let rho = solution.rho / w.w11;
    let gamma = solution.gamma / w.w11;
    let omega = (C64::new(1.0, 0.0) - solution.gamma * problem.sigma2) * problem.beta / (w.w11 * problem.eta);
    Ok((rho, gamma, omega))
}

/// Exact solution without interferers (`alpha -> 0`) for the loaded case.
fn interference_free(problem: &Problem) -> Result<[C64; 3]> {
    let z = problem.point.re;
    let f = |r: f64| -> Result<f64> {
        let w = problem.window.moments(C64::new(r, 0.0))?;
        let nu = 1.0 / (problem.sigma2 * w.w11.re - z);
        Ok(r - problem.beta / problem.eta * problem.sigma2 * nu)
    };
    let (lo, hi) = expand_bracket(f, 0.0, 1.0, 80)?;
    let r = solve_1d(f, Bracket::Interval(lo, hi), SolveOptions::default())?.root[0].re;
    let w = problem.window.moments(C64::new(r, 0.0))?;
    let nu = 1.0 / (problem.sigma2 * w.w11.re - z);
    Ok([
        C64::new(nu * problem.beta_star * problem.channel.mean(), 0.0),
        C64::new(r, 0.0),
        C64::new(nu, 0.0),
    ])
}

/// Solves the first-order system on the real axis (`z = -mu/eta <= 0`).
fn solve_real(problem: &Problem) -> Result<AlsFirstOrder> {
    if problem.pinned() {
        if !problem.coupling_can_be_pinned() {
            return Err(Error::IllPosed(format!(
                "without diagonal loading the training length eta = {} must exceed beta = {}",
                problem.eta, problem.beta
            )));
        }
        let r = pinned_coupling(problem)?;
        let rc = C64::new(r, 0.0);
        let (rho0, _, omega0) = mmse_seed(problem, r)?;
        let direct = newton(|x| unloaded_residuals(problem, rc, x), &[rho0, omega0])
            .and_then(|x| admissible(unloaded_state(problem, rc, &x)?).map(|_| x));
        let root = match direct {
            Ok(root) => root,
            Err(_) => continue_in_load(problem, |p, seed| {
                let seed = match seed {
                    Some(s) => s.to_vec(),
                    None => {
                        let (rho, _, omega) = mmse_seed(p, r)?;
                        vec![rho, omega]
                    }
                };
                let x = newton(|x| unloaded_residuals(p, rc, x), &seed)?;
                admissible(unloaded_state(p, rc, &x)?).map(|_| x)
            })?,
        };
        return unloaded_state(problem, rc, &root);
    }
    let seed = loaded_seed(problem)?;
    let direct = newton(|x| loaded_residuals(problem, x), &seed)
        .and_then(|x| admissible(state(problem, x[0], x[1], x[2])?).map(|_| x));
    let root = match direct {
        Ok(root) => root,
        Err(_) => continue_in_load(problem, |p, seed| {
            let seed = match seed {
                Some(s) => s.to_vec(),
                None => interference_free(p)?.to_vec(),
            };
            let x = newton(|x| loaded_residuals(p, x), &seed)?;
            admissible(state(p, x[0], x[1], x[2])?).map(|_| x)
        })?,
    };
    state(problem, root[0], root[1], root[2])
}

/// On the real axis left of the spectrum every trace-type quantity is a
/// positive number; roots violating this belong to a spurious branch of the
/// polynomial system and are rejected.
fn admissible(s: AlsFirstOrder) -> Result<AlsFirstOrder> {
    let positive = [("gamma", s.gamma), ("rho", s.rho), ("nu", s.nu), ("r", s.r)];
    for (name, value) in positive {
        if value.re.is_nan() || value.re <= 0.0 || value.im.abs() > 1e-9 * value.re.abs().max(1.0) {
            return Err(Error::NonConvergence {
                context: format!("root on a non-physical branch ({name} = {value})"),
                iterations: 0,
                residual: f64::NAN,
                best: vec![s.rho, s.r, s.gamma],
            });
        }
    }
    Ok(s)
}

fn loaded_seed(problem: &Problem) -> Result<Vec<C64>> {
    // Use the unloaded equivalence when it is well defined, otherwise the
    // interference-free solution.
    if problem.coupling_can_be_pinned() {
        let probe = Problem {
            point: C64::new(0.0, 0.0),
            ..*problem
        };
        if let Ok(r) = pinned_coupling(&probe) {
            if let Ok((rho, gamma, _)) = mmse_seed(problem, r) {
                return Ok(vec![rho, C64::new(r, 0.0), gamma]);
            }
        }
    }
    Ok(interference_free(problem)?.to_vec())
}

/// Homotopy in the system load: solves a sequence of problems with
/// `alpha_t = t alpha`, seeding each solve with the previous root.
fn continue_in_load<F>(problem: &Problem, mut solve_at: F) -> Result<Vec<C64>>
where
    F: FnMut(&Problem, Option<&[C64]>) -> Result<Vec<C64>>,
{
    let mut t = 0.02;
    let mut step = 0.1;
    let mut root = solve_at(&problem.with_alpha(problem.alpha * t), None)
        .map_err(|e| e.with_context("load continuation start"))?;
    let mut failures = 0;
    while t < 1.0 {
        let next = (t + step).min(1.0);
        match solve_at(&problem.with_alpha(problem.alpha * next), Some(&root)) {
            Ok(r) => {
                root = r;
                t = next;
                step *= 1.5;
            }
            Err(e) => {
                step *= 0.5;
                failures += 1;
                if step < 1e-6 || failures > 60 {
                    return Err(e.with_context("load continuation"));
                }
            }
        }
    }
    Ok(root)
}

/// Solves the first-order system in the upper half-plane by continuation
/// from a large imaginary part.
fn solve_complex(problem: &Problem) -> Result<AlsFirstOrder> {
    let point = problem.point;
    let start_height = (10.0 * point.norm()).max(10.0).max(point.im);
    let start = Problem {
        point: C64::new(point.re, start_height),
        ..*problem
    };
    let z = start.point;
    let signal = problem.alpha * problem.beta_star * problem.mean_power * problem.channel.mean();
    let seed = [
        -C64::new(problem.beta_star * problem.channel.mean(), 0.0) / z,
        -C64::new((signal + problem.beta * problem.sigma2) / problem.eta, 0.0) / z,
        -z.inv(),
    ];
    // Relaxation: rho <- nu beta* Ha11 / Ds, r <- omega + (beta/eta) sigma2 gamma,
    // gamma <- (eta r W11 / beta - 1) / z.
    let relaxed = damped_fixed_point(
        |x| {
            let s = state(&start, x[0], x[1], x[2])?;
            let one = C64::new(1.0, 0.0);
            let ds = match start.signature {
                SignatureKind::Iid => one,
                SignatureKind::Isometric => one - (one - s.gamma / s.nu) * start.beta,
            };
            Ok(vec![
                s.nu * s.channel_moments[1] * start.beta_star / ds,
                s.omega + s.gamma * (start.sigma2 * start.beta / start.eta),
                (s.r * s.window.w11 * (start.eta / start.beta) - 1.0) / z,
            ])
        },
        &seed,
        0.5,
        SolveOptions {
            tolerance: 1e-12,
            max_iterations: 5000,
        },
    )?;
    let mut root = relaxed.root;
    let steps = 40usize;
    let ratio = (point.im / start_height).powf(1.0 / steps as f64);
    let mut height = start_height;
    for k in 0..=steps {
        height = if k == steps { point.im } else { height * ratio };
        let p = Problem {
            point: C64::new(point.re, height),
            ..*problem
        };
        // `1 + z gamma` cancels to O(1/|z|), which limits the attainable
        // scale-free residual to about eps |z|.
        let tolerance = FIRST_ORDER_TOLERANCE.max(16.0 * f64::EPSILON * p.point.norm());
        root = newton_to(|x| loaded_residuals(&p, x), &root, tolerance)?;
    }
    let s = state(problem, root[0], root[1], root[2])?;
    if s.gamma.im <= 0.0 {
        return Err(Error::IllPosed(format!(
            "continuation reached a solution outside the upper half-plane at z = {point}"
        )));
    }
    Ok(s)
}

fn transient_window(params: &AlsParams) -> Result<WindowModel> {
    Ok(WindowModel::Transient(window_distribution(&params.window, params.eta)?))
}

/// Solves the first-order ALS system at `z = -mu/eta`.
pub fn solve_als_first(params: &AlsParams) -> Result<AlsFirstOrder> {
    params.validate()?;
    let window = transient_window(params)?;
    let problem = Problem::transient(params, &window, C64::new(-params.mu / params.eta, 0.0));
    solve_real(&problem)
}

/// Limiting Stieltjes transform of the eigenvalue distribution of the
/// windowed sample covariance `(1/i) Y W Y^†` at `Im z > 0`.
pub fn als_stieltjes(params: &AlsParams, point: C64) -> Result<C64> {
    params.validate()?;
    if point.im <= 0.0 {
        return Err(Error::domain("Stieltjes transform needs Im z > 0"));
    }
    let window = transient_window(params)?;
    let problem = Problem::transient(params, &window, point);
    Ok(solve_complex(&problem)?.gamma)
}

/// Coefficients reused by the three second-order systems.
struct SecondOrderCoefficients {
    ea02: f64,
    ea12: f64,
    ea22: f64,
    ha02: f64,
    ha12: f64,
    ha22: f64,
    nu2: f64,
    rho2: f64,
    psi_gap2: f64,
    tau_gap2: f64,
}

fn coefficients(problem: &Problem, first: &AlsFirstOrder) -> Result<SecondOrderCoefficients> {
    let ea = problem.power.second_order_moments(first.power_argument)?;
    let ha = problem.channel.second_order_moments(first.channel_argument)?;
    Ok(SecondOrderCoefficients {
        ea02: ea[0],
        ea12: ea[1],
        ea22: ea[2],
        ha02: ha[0],
        ha12: ha[1],
        ha22: ha[2],
        nu2: first.nu.norm_sqr(),
        rho2: first.rho.norm_sqr(),
        psi_gap2: (first.window.mean - first.psi).norm_sqr(),
        tau_gap2: (problem.alpha * problem.mean_power * first.window.mean - first.tau).norm_sqr(),
    })
}

/// Dense complex linear system assembled row by row.
struct LinearSystem {
    rows: Vec<Vec<C64>>,
    rhs: Vec<C64>,
    unknowns: usize,
}

impl LinearSystem {
    fn new(unknowns: usize) -> Self {
        Self {
            rows: Vec::new(),
            rhs: Vec::new(),
            unknowns,
        }
    }

    fn row(&mut self, terms: &[(usize, C64)], rhs: C64) {
        let mut row = vec![C64::new(0.0, 0.0); self.unknowns];
        for &(j, c) in terms {
            row[j] += c;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Least-squares solution (exact for square, consistent systems) after
    /// row and column equilibration, with its componentwise backward error;
    /// `stage` labels errors.
    fn solve(&self, stage: usize) -> Result<(Vec<C64>, f64)> {
        let m = self.rows.len();
        let n = self.unknowns;
        let a = DMatrix::from_fn(m, n, |i, j| self.rows[i][j]);
        let b = DVector::from_iterator(m, self.rhs.iter().copied());
        let row_scale: Vec<f64> = (0..m)
            .map(|i| {
                let largest = a.row(i).iter().map(|c| c.norm()).fold(0.0, f64::max);
                if largest > 0.0 {
                    1.0 / largest
                } else {
                    1.0
                }
            })
            .collect();
        let col_scale: Vec<f64> = (0..n)
            .map(|j| {
                let largest = (0..m).map(|i| a[(i, j)].norm() * row_scale[i]).fold(0.0, f64::max);
                if largest > 0.0 {
                    1.0 / largest
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = DMatrix::from_fn(m, n, |i, j| a[(i, j)] * (row_scale[i] * col_scale[j]));
        let scaled_rhs = DVector::from_fn(m, |i, _| b[i] * row_scale[i]);
        let y = if m == n {
            scaled.lu().solve(&scaled_rhs)
        } else {
            scaled.svd(true, true).solve(&scaled_rhs, 1e-15).ok()
        }
        .filter(|y| y.iter().all(|c| c.is_finite()))
        .ok_or_else(|| Error::IllPosed(format!("singular second-order system (stage {stage})")))?;
        let x: Vec<C64> = y.iter().zip(&col_scale).map(|(v, s)| v * *s).collect();
        let residual = (0..m)
            .map(|i| {
                let mut lhs = C64::new(0.0, 0.0);
                let mut magnitude = b[i].norm();
                for j in 0..n {
                    let term = a[(i, j)] * x[j];
                    lhs += term;
                    magnitude += term.norm();
                }
                if magnitude > 0.0 {
                    (lhs - b[i]).norm() / magnitude
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if residual > SECOND_ORDER_TOLERANCE {
            return Err(Error::NonConvergence {
                context: format!("second-order stage {stage}"),
                iterations: 1,
                residual,
                best: x,
            });
        }
        Ok((x, residual))
    }
}

/// Largest accepted componentwise backward error of a second-order system.
/// The noise-set system is over-determined and its defect grows with the
/// conditioning of the problem (for instance as `eta` approaches `beta`).
const SECOND_ORDER_TOLERANCE: f64 = 1e-8;

// Unknown ordering in the first two second-order systems.
const R: usize = 0;
const G: usize = 1;
const NU: usize = 2;
const RHO: usize = 3;
const TAU: usize = 4;
const PSI: usize = 5;
const OMEGA: usize = 6;

fn to_set(x: &[C64]) -> SecondOrderSet {
    SecondOrderSet {
        r: x[R],
        gamma: x[G],
        nu: x[NU],
        rho: x[RHO],
        tau: x[TAU],
        psi: x[PSI],
        omega: x[OMEGA],
    }
}

/// Rows shared by the noise and channel systems: the `r` relation, the
/// signature-dependent `rho`/`tau` relations and the training-dependent
/// `psi`/`omega` relations, each with its own constant term.
fn common_rows(
    sys: &mut LinearSystem,
    p: &Problem,
    f: &AlsFirstOrder,
    c: &SecondOrderCoefficients,
    rho_const: f64,
    tau_const: f64,
) {
    let one = C64::new(1.0, 0.0);
    let re = |v: f64| C64::new(v, 0.0);
    let (alpha, bs) = (p.alpha, p.beta_star);
    sys.row(&[(R, one), (OMEGA, -one), (G, re(-p.sigma2 * p.beta / p.eta))], C64::new(0.0, 0.0));
    match p.signature {
        SignatureKind::Iid => {
            sys.row(
                &[(RHO, one), (NU, re(-bs * c.ha12)), (TAU, re(-bs * c.nu2 * c.ha22))],
                re(rho_const),
            );
            sys.row(
                &[(TAU, one), (PSI, re(-alpha * c.ea12)), (RHO, re(-alpha * c.psi_gap2 * c.ea22))],
                re(tau_const),
            );
        }
        SignatureKind::Isometric => {
            let a_s = alpha * (c.ea02 - 1.0) + 1.0;
            let b_s = bs * (c.ha02 - 1.0) + 1.0;
            sys.row(
                &[
                    (RHO, re(a_s)),
                    (NU, re(-bs * c.ha12)),
                    (TAU, re(-bs * c.nu2 * c.ha22)),
                    (PSI, re(alpha * c.rho2 * c.ea12)),
                ],
                re(rho_const),
            );
            sys.row(
                &[
                    (TAU, re(b_s)),
                    (PSI, re(-alpha * c.ea12)),
                    (RHO, re(-alpha * c.psi_gap2 * c.ea22)),
                    (NU, re(bs * c.tau_gap2 * c.ha12)),
                ],
                re(tau_const),
            );
        }
    }
    training_rows(sys, p, f, c, RHO, PSI, OMEGA, G, R, 0.0, 0.0);
}

/// `psi` and `omega` relations for the given column layout, with constant
/// terms added to each right-hand side.
#[allow(clippy::too_many_arguments)]
fn training_rows(
    sys: &mut LinearSystem,
    p: &Problem,
    f: &AlsFirstOrder,
    c: &SecondOrderCoefficients,
    rho: usize,
    psi: usize,
    omega: usize,
    gamma: usize,
    r: usize,
    psi_const: f64,
    omega_const: f64,
) {
    let one = C64::new(1.0, 0.0);
    let re = |v: f64| C64::new(v, 0.0);
    let w22 = f.window.w22;
    let a_eta = p.alpha / p.eta;
    match p.training {
        TrainingKind::Iid => {
            sys.row(&[(psi, one), (r, re(-w22))], re(psi_const));
            sys.row(
                &[(omega, one), (rho, re(-a_eta * c.ea12)), (psi, re(-a_eta * c.rho2 * c.ea22))],
                re(omega_const),
            );
        }
        TrainingKind::Orthogonal => {
            let a_star = p.alpha / p.eta_star;
            let a_b = a_star * (c.ea02 - 1.0) + 1.0;
            sys.row(
                &[(psi, re(a_b)), (r, re(-w22)), (rho, re(a_star * c.psi_gap2 * c.ea12))],
                re(psi_const),
            );
            let omega2 = f.omega.norm_sqr();
            let c_b = (p.eta / p.eta_star) * (omega2 * w22 - 2.0 * (f.omega * f.window.w11).re) + 1.0;
            sys.row(
                &[
                    (omega, re(c_b)),
                    (rho, re(-a_eta * c.ea12)),
                    (psi, re(-a_eta * c.rho2 * c.ea22)),
                    (gamma, re(p.sigma2 * p.beta / p.eta_star * omega2 * w22)),
                ],
                re(omega_const),
            );
        }
    }
}

fn solve_second(problem: &Problem, first: &AlsFirstOrder) -> Result<AlsSecondOrder> {
    let c = coefficients(problem, first)?;
    let one = C64::new(1.0, 0.0);
    let re = |v: f64| C64::new(v, 0.0);
    let f = first;
    let (alpha, beta, bs, eta) = (problem.alpha, problem.beta, problem.beta_star, problem.eta);
    let z = problem.point;
    let w12 = f.window.w12;
    let w22 = f.window.w22;

    // Noise-weighted set.
    let mut sys = LinearSystem::new(7);
    common_rows(&mut sys, problem, f, &c, 0.0, 0.0);
    sys.row(&[(NU, one), (R, re(-c.nu2 * problem.sigma2 * w22))], re(c.nu2));
    // gamma + z* gamma~ = (eta/beta) r~ W12, plus the companion relation that
    // keeps the system determined when z = 0.
    sys.row(&[(G, z.conj()), (R, re(-eta / beta * w12))], -f.gamma);
    sys.row(
        &[
            (G, f.nu),
            (NU, -f.gamma),
            (RHO, -(f.psi - f.window.mean).conj() * (alpha / beta * c.nu2 * c.ea12)),
            (PSI, -f.rho * (alpha / beta * c.nu2 * c.ea12)),
        ],
        C64::new(0.0, 0.0),
    );
    let (noise, consistency) = sys.solve(1)?;
    let noise = to_set(&noise);

    // Channel-weighted set.
    let mut sys = LinearSystem::new(7);
    let tau_const = match problem.signature {
        SignatureKind::Iid => 0.0,
        SignatureKind::Isometric => -bs * c.tau_gap2 * c.nu2 * c.ha22,
    };
    common_rows(&mut sys, problem, f, &c, bs * c.nu2 * c.ha22, tau_const);
    sys.row(&[(NU, one), (R, re(-problem.sigma2 * c.nu2 * w22))], C64::new(0.0, 0.0));
    let gamma_b = (noise.nu * c.ha12 + noise.tau * (c.nu2 * c.ha22)) * (bs / beta);
    sys.row(&[(G, one)], gamma_b);
    let (channel, _) = sys.solve(2)?;
    let channel = to_set(&channel);

    // Interference-weighted set: unknowns r, gamma, rho, psi, omega.
    const IR: usize = 0;
    const IG: usize = 1;
    const IRHO: usize = 2;
    const IPSI: usize = 3;
    const IOMEGA: usize = 4;
    let mut sys = LinearSystem::new(5);
    sys.row(&[(IR, one), (IOMEGA, -one), (IG, re(-problem.sigma2 * beta / eta))], C64::new(0.0, 0.0));
    let gamma_c = (noise.rho * c.ea12 + noise.psi * (c.rho2 * c.ea22)) * (alpha / beta);
    sys.row(&[(IG, one)], gamma_c);
    let rho_c_source = (channel.rho * c.ea12 + channel.psi * (c.rho2 * c.ea22)) * alpha;
    match problem.signature {
        SignatureKind::Iid => sys.row(&[(IRHO, one)], rho_c_source),
        SignatureKind::Isometric => {
            let a_s = alpha * (c.ea02 - 1.0) + 1.0;
            sys.row(
                &[(IRHO, re(a_s)), (IPSI, re(alpha * c.rho2 * c.ea12))],
                rho_c_source - alpha * c.rho2 * c.ea12,
            )
        }
    }
    let a_eta = alpha / eta;
    let psi_const = match problem.training {
        TrainingKind::Iid => 0.0,
        TrainingKind::Orthogonal => -(alpha / problem.eta_star) * c.psi_gap2 * c.rho2 * c.ea22,
    };
    training_rows(
        &mut sys,
        problem,
        f,
        &c,
        IRHO,
        IPSI,
        IOMEGA,
        IG,
        IR,
        psi_const,
        a_eta * c.rho2 * c.ea22,
    );
    let (x, _) = sys.solve(3)?;
    let interference = SecondOrderSet {
        r: x[IR],
        gamma: x[IG],
        nu: C64::new(0.0, 0.0),
        rho: x[IRHO],
        tau: C64::new(0.0, 0.0),
        psi: x[IPSI],
        omega: x[IOMEGA],
    };
    Ok(AlsSecondOrder {
        noise,
        channel,
        interference,
        consistency,
    })
}

/// Solves the second-order ALS systems at a first-order solution.
pub fn solve_als_second(params: &AlsParams, first: &AlsFirstOrder) -> Result<AlsSecondOrder> {
    let window = transient_window(params)?;
    let problem = Problem::transient(params, &window, first.point);
    solve_second(&problem, first)
}

/// Full transient analysis (first and second order).
pub fn analyze_transient(params: &AlsParams) -> Result<AlsAnalysis> {
    params.validate()?;
    let window = transient_window(params)?;
    let problem = Problem::transient(params, &window, C64::new(-params.mu / params.eta, 0.0));
    let first = solve_real(&problem)?;
    let second = solve_second(&problem, &first)?;
    Ok(AlsAnalysis { first, second })
}

/// Asymptotic ALS output SINR after `eta N` training intervals.
pub fn als_transient_sinr(params: &AlsParams, stream_power: f64) -> Result<AlsSinr> {
    analyze_transient(params)?.sinr(params.mode, stream_power)
}

/// Full steady-state analysis (training length to infinity) for an
/// exponential window; `params.eta` and `params.training` are ignored.
pub fn analyze_steady_state(params: &AlsParams) -> Result<AlsAnalysis> {
    params.mmse_equivalent().validate()?;
    if !(params.mu.is_finite() && params.mu >= 0.0) {
        return Err(Error::domain(format!("mu = {} must be non-negative", params.mu)));
    }
    let window = match &params.window {
        WindowSpec::Exponential { lbar } if lbar.is_finite() && *lbar > 0.0 => {
            WindowModel::SteadyExponential { lbar: *lbar }
        }
        WindowSpec::Exponential { lbar } => {
            return Err(Error::domain(format!("window length lbar = {lbar} must be positive")))
        }
        WindowSpec::Rectangular => {
            return Err(Error::domain(
                "the steady state needs a fixed-length window; a rectangular window tends to the MMSE receiver",
            ))
        }
        WindowSpec::Custom { .. } => {
            return Err(Error::domain(
                "steady-state limits are available for exponential windows only",
            ))
        }
    };
    let problem = Problem::steady(params, &window);
    let first = solve_real(&problem)?;
    let second = solve_second(&problem, &first)?;
    Ok(AlsAnalysis { first, second })
}

/// Steady-state ALS output SINR with a fixed-length exponential window.
pub fn als_steady_state(params: &AlsParams, stream_power: f64) -> Result<AlsSinr> {
    analyze_steady_state(params)?.sinr(params.mode, stream_power)
}

/// One row of an SINR-versus-training-length sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    /// Normalised training length.
    pub eta: f64,
    /// ALS SINR with training, in dB.
    pub sinr_db_training: f64,
    /// Semi-blind ALS SINR, in dB.
    pub sinr_db_semiblind: f64,
    /// MMSE SINR, in dB.
    pub sinr_db_mmse: f64,
}

/// Evaluates the transient SINR (both modes) and the MMSE reference for each
/// training length, in parallel and in input order.
pub fn als_sweep(params: &AlsParams, etas: &[f64], stream_power: f64) -> Result<Vec<SweepRow>> {
    let mmse = to_db(crate::mmse::mmse_sinr(&params.mmse_equivalent(), stream_power)?);
    etas.par_iter()
        .map(|&eta| {
            let p = AlsParams { eta, ..params.clone() };
            let analysis = analyze_transient(&p)?;
            Ok(SweepRow {
                eta,
                sinr_db_training: to_db(analysis.sinr(ReceiverMode::Training, stream_power)?.sinr),
                sinr_db_semiblind: to_db(analysis.sinr(ReceiverMode::SemiBlind, stream_power)?.sinr),
                sinr_db_mmse: mmse,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmse::mmse_sinr;

    fn base(window: WindowSpec, eta: f64, mu: f64) -> AlsParams {
        AlsParams {
            alpha: 0.5,
            beta: 1.0,
            eta,
            sigma2: 0.1,
            mu,
            power: ScalarDistribution::point_mass(1.0),
            channel: ScalarDistribution::point_mass(1.0),
            window,
            signature: SignatureKind::Iid,
            training: TrainingKind::Iid,
            mode: ReceiverMode::Training,
        }
    }

    #[test]
    fn rectangular_unloaded_coupling() {
        let first = solve_als_first(&base(WindowSpec::Rectangular, 2.0, 0.0)).unwrap();
        assert!((first.r.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_unloaded_training_is_ill_posed() {
        let err = solve_als_first(&base(WindowSpec::Rectangular, 0.8, 0.0)).unwrap_err();
        assert!(matches!(err, Error::IllPosed(_)));
    }

    #[test]
    fn unloaded_equivalence_with_mmse() {
        let p = base(WindowSpec::Exponential { lbar: 2.0 }, 3.0, 0.0);
        let first = solve_als_first(&p).unwrap();
        let mmse = solve_mmse(&p.mmse_equivalent(), C64::new(-p.sigma2, 0.0)).unwrap();
        assert!((first.gamma * first.window.w11 - mmse.gamma).norm() < 1e-9);
        assert!((first.rho * first.window.w11 - mmse.rho).norm() < 1e-9);
    }

    #[test]
    fn long_training_recovers_mmse() {
        let p = base(WindowSpec::Rectangular, 1e4, 0.1);
        let als = als_transient_sinr(&p, 1.0).unwrap().sinr;
        let mmse = mmse_sinr(&p.mmse_equivalent(), 1.0).unwrap();
        assert!((als - mmse).abs() / mmse < 1e-3, "{als} vs {mmse}");
    }
}
