//! Large-system analysis of the full-CSI MMSE receiver.
//!
//! For the covariance `R = H S A A^† S^† H^† - z I` the normalised trace
//! `(1/M) tr R^{-1}`, the channel-weighted trace `rho` and the auxiliary
//! variable `tau` converge to the solution of a scalar fixed-point system
//! driven by the ratio moments
//!
//! - `E_{m,1} = E[P^m / (1 + P rho)]` over the stream powers, and
//! - `H_{m,1} = E[H^m / (1 + H x)]` with `x = (tau - alpha E[P]) / z` over
//!   the channel eigenvalues.
//!
//! At `z = -sigma^2` the output SINR of stream `k` is `P_k rho`.

use crate::distributions::ScalarDistribution;
use crate::rootfind::{
    damped_fixed_point, expand_bracket, solve_1d, solve_newton, Bracket, JacobianKind, SolveOptions,
};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Statistics of the signature (spreading / precoding) matrix `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureKind {
    /// Independent identically distributed entries.
    Iid,
    /// Orthonormal columns drawn from the Haar measure (requires `alpha <= 1`).
    Isometric,
}

/// System description for the MMSE analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmseParams {
    /// Streams per transmit dimension, `K / N`.
    pub alpha: f64,
    /// Receive dimensions per transmit dimension, `M / N`.
    pub beta: f64,
    /// Noise variance per receive dimension.
    pub sigma2: f64,
    /// Limiting distribution of the stream powers (eigenvalues of `A^2`).
    pub power: ScalarDistribution,
    /// Limiting distribution of the non-zero eigenvalues of `H H^†`.
    pub channel: ScalarDistribution,
    /// Signature statistics.
    pub signature: SignatureKind,
}

impl MmseParams {
    /// `min(beta, 1)`: the fraction of channel eigenvalues that are non-zero.
    pub fn beta_star(&self) -> f64 {
        self.beta.min(1.0)
    }

    /// Checks the parameter domain.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta), ("sigma2", self.sigma2)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!("{name} = {value} must be positive")));
            }
        }
        if self.signature == SignatureKind::Isometric && self.alpha > 1.0 {
            return Err(Error::domain(format!(
                "isometric signatures need alpha <= 1 (got {})",
                self.alpha
            )));
        }
        self.power.validate()?;
        self.channel.validate()
    }
}

/// First-order solution at a spectral argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseSolution {
    /// Limiting normalised trace of `R^{-1}` (the Stieltjes transform).
    pub gamma: C64,
    /// Channel-weighted trace; `P_k rho` is the SINR at `z = -sigma^2`.
    pub rho: C64,
    /// Auxiliary transmit-dimension variable.
    pub tau: C64,
    /// Spectral argument the solution belongs to.
    pub point: C64,
    /// `[E_{0,1}, E_{1,1}]` at `rho`.
    pub power_moments: [C64; 2],
    /// Argument `x = (tau - alpha E[P]) / z` of the channel moments.
    pub channel_argument: C64,
    /// `[H_{0,1}, H_{1,1}]` at `channel_argument`.
    pub channel_moments: [C64; 2],
}

/// Second-order quantities entering the interference-plus-noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseSecondOrder {
    /// Noise-weighted trace (`R^{-†} R^{-1}` weighted by the channel).
    pub rho2: f64,
    /// Channel-squared weighted trace.
    pub rho3: f64,
    /// Interference-weighted trace.
    pub rho4: f64,
    /// Companion of `rho2`.
    pub tau2: f64,
    /// Companion of `rho3`.
    pub tau3: f64,
}

impl MmseSolution {
    /// Terms of the identity chain
    /// `beta (1 + z gamma) = alpha (1 - E01) = alpha rho E11 = beta* (1 - H01)
    /// = beta* x H11`, in that order.
    pub fn identity_chain(&self, params: &MmseParams) -> [C64; 5] {
        let one = C64::new(1.0, 0.0);
        let bs = params.beta_star();
        [
            (one + self.point * self.gamma) * params.beta,
            (one - self.power_moments[0]) * params.alpha,
            self.rho * self.power_moments[1] * params.alpha,
            (one - self.channel_moments[0]) * bs,
            self.channel_argument * self.channel_moments[1] * bs,
        ]
    }

    /// Largest deviation of the identity chain from its first term.
    pub fn identity_defect(&self, params: &MmseParams) -> f64 {
        let chain = self.identity_chain(params);
        chain[1..].iter().map(|v| (v - chain[0]).norm()).fold(0.0, f64::max)
    }
}

/// Evaluates every first-order variable implied by a trial `rho`.
fn state_from_rho(params: &MmseParams, point: C64, rho: C64) -> Result<MmseSolution> {
    let one = C64::new(1.0, 0.0);
    let power_moments = params.power.first_order_moments(rho)?;
    let e11 = power_moments[1];
    let load = rho * e11 * params.alpha;
    let gamma = -(one - load / params.beta) / point;
    let denominator = match params.signature {
        SignatureKind::Iid => one,
        SignatureKind::Isometric => one - load,
    };
    let mean_power = params.power.mean();
    let tau = params.alpha * mean_power - e11 * params.alpha / denominator;
    let channel_argument = (tau - params.alpha * mean_power) / point;
    let channel_moments = params.channel.first_order_moments(channel_argument)?;
    Ok(MmseSolution {
        gamma,
        rho,
        tau,
        point,
        power_moments,
        channel_argument,
        channel_moments,
    })
}

/// `rho` implied by the fixed-point map at a trial state.
fn mapped_rho(params: &MmseParams, state: &MmseSolution) -> C64 {
    let one = C64::new(1.0, 0.0);
    let denominator = match params.signature {
        SignatureKind::Iid => one,
        SignatureKind::Isometric => one - state.rho * state.power_moments[1] * params.alpha,
    };
    -state.channel_moments[1] * params.beta_star() / (state.point * denominator)
}

fn residual(params: &MmseParams, point: C64, rho: C64) -> Result<C64> {
    let state = state_from_rho(params, point, rho)?;
    let denominator = match params.signature {
        SignatureKind::Iid => C64::new(1.0, 0.0),
        SignatureKind::Isometric => C64::new(1.0, 0.0) - rho * state.power_moments[1] * params.alpha,
    };
    // Multiplied through by the isometric denominator to stay finite.
    Ok(rho * denominator + state.channel_moments[1] * params.beta_star() / point)
}

/// Solves the first-order MMSE system at spectral argument `point`.
///
/// For real negative `point` (the SINR evaluation point `-sigma^2`) the
/// positive root in `rho` is bracketed and found directly. Otherwise
/// (`Im point > 0`) the solution is continued from a large imaginary part,
/// where the resolvent is nearly `-1/z`, down to the requested point.
pub fn solve_mmse(params: &MmseParams, point: C64) -> Result<MmseSolution> {
    params.validate()?;
    if point.im == 0.0 {
        if point.re >= 0.0 {
            return Err(Error::domain(format!(
                "real spectral argument {} must be negative",
                point.re
            )));
        }
        return solve_real_axis(params, point.re);
    }
    if point.im < 0.0 {
        return Err(Error::domain("spectral argument must lie in the upper half-plane"));
    }
    solve_upper_half_plane(params, point)
}

fn solve_real_axis(params: &MmseParams, point: f64) -> Result<MmseSolution> {
    let z = C64::new(point, 0.0);
    let f = |rho: f64| residual(params, z, C64::new(rho, 0.0)).map(|r| r.re);
    // With no interference, rho = beta* E[H] / |z|, an upper bound for i.i.d.
    // signatures; isometric signatures may need a larger bracket.
    let ceiling = params.beta_star() * params.channel.mean() / (-point);
    let (lower, upper) = expand_bracket(f, 0.0, ceiling * 1.0001 + 1e-12, 200)?;
    let report = solve_1d(
        |rho| residual(params, z, C64::new(rho, 0.0)).map(|r| r.re / (1.0 + rho.abs())),
        Bracket::Interval(lower, upper),
        SolveOptions {
            tolerance: 1e-15,
            max_iterations: 400,
        },
    )?;
    state_from_rho(params, z, report.root[0])
}

fn solve_upper_half_plane(params: &MmseParams, point: C64) -> Result<MmseSolution> {
    let opts = SolveOptions::default();
    let start_height = (10.0 * point.norm()).max(10.0).max(point.im);
    let start = C64::new(point.re, start_height);
    // Far from the spectrum, rho is close to -beta* E[H] / z; polish by
    // relaxation before starting the continuation.
    let seed = -C64::new(params.beta_star() * params.channel.mean(), 0.0) / start;
    let relaxed = damped_fixed_point(
        |x| {
            let state = state_from_rho(params, start, x[0])?;
            Ok(vec![mapped_rho(params, &state)])
        },
        &[seed],
        0.5,
        SolveOptions {
            tolerance: 1e-12,
            max_iterations: 5000,
        },
    )?;
    let mut rho = relaxed.root[0];
    let steps = 40usize;
    let ratio = (point.im / start_height).powf(1.0 / steps as f64);
    let mut height = start_height;
    for _ in 0..steps {
        height *= ratio;
        let z = C64::new(point.re, height);
        rho = newton_at(params, z, rho, opts)?;
    }
    let rho = newton_at(params, point, rho, opts)?;
    let solution = state_from_rho(params, point, rho)?;
    if solution.gamma.im <= 0.0 {
        return Err(Error::IllPosed(format!(
            "continuation reached a solution outside the upper half-plane at z = {point}"
        )));
    }
    Ok(solution)
}

fn newton_at(params: &MmseParams, z: C64, seed: C64, opts: SolveOptions) -> Result<C64> {
    let report = solve_newton(
        |x| Ok(vec![residual(params, z, x[0])? / (1.0 + x[0].norm())]),
        &[seed],
        JacobianKind::Holomorphic,
        opts,
    )?;
    Ok(report.root[0])
}

/// Limiting Stieltjes transform `(1/M) tr (H S A A^† S^† H^† - z I)^{-1}`
/// for `Im z > 0`.
pub fn mmse_stieltjes(params: &MmseParams, point: C64) -> Result<C64> {
    if point.im <= 0.0 {
        return Err(Error::domain("Stieltjes transform needs Im z > 0"));
    }
    Ok(solve_mmse(params, point)?.gamma)
}

/// Asymptotic MMSE output SINR of a stream with power `stream_power`.
pub fn mmse_sinr(params: &MmseParams, stream_power: f64) -> Result<f64> {
    let solution = solve_mmse(params, C64::new(-params.sigma2, 0.0))?;
    Ok(stream_power * solution.rho.re)
}

/// Solves the (linear) second-order system at a first-order solution.
pub fn solve_mmse_second_order(params: &MmseParams, solution: &MmseSolution) -> Result<MmseSecondOrder> {
    let power = params.power.second_order_moments(solution.rho)?;
    let channel = params.channel.second_order_moments(solution.channel_argument)?;
    let (e02, e12, e22) = (power[0], power[1], power[2]);
    let (h02, h12, h22) = (channel[0], channel[1], channel[2]);
    let alpha = params.alpha;
    let scale = params.beta_star() / solution.point.norm_sqr();
    let (a11, a22, coupling) = match params.signature {
        SignatureKind::Iid => (1.0, 1.0, 0.0),
        SignatureKind::Isometric => (
            alpha * (e02 - 1.0) + 1.0,
            params.beta_star() * (h02 - 1.0) + 1.0,
            (alpha * params.power.mean() - solution.tau).norm_sqr(),
        ),
    };
    // Each pair solves
    //   a11 rho_j - scale H22 tau_j          = scale * rhs_rho
    //  -alpha E22 rho_j + a22 tau_j          = -scale * coupling * rhs_rho
    let solve_pair = |rhs: f64| -> Result<(f64, f64)> {
        let det = a11 * a22 - scale * h22 * alpha * e22;
        if det.abs() < 1e-300 {
            return Err(Error::IllPosed("singular second-order MMSE system".into()));
        }
        let b1 = scale * rhs;
        let b2 = -scale * coupling * rhs;
        let rho_j = (b1 * a22 + scale * h22 * b2) / det;
        let tau_j = (a11 * b2 + alpha * e22 * b1) / det;
        Ok((rho_j, tau_j))
    };
    let (rho2, tau2) = solve_pair(h12)?;
    let (rho3, tau3) = solve_pair(h22)?;
    let rho4 = match params.signature {
        SignatureKind::Iid => alpha * rho3 * e12,
        SignatureKind::Isometric => alpha * (rho3 * e12 - solution.rho.norm_sqr() * e12) / a11,
    };
    Ok(MmseSecondOrder {
        rho2,
        rho3,
        rho4,
        tau2,
        tau3,
    })
}

/// SINR from the second-order moments, `P |rho|^2 / (rho4 + sigma^2 rho2)`.
/// Coincides with [`mmse_sinr`]; provided as an independent check.
pub fn alternate_mmse_sinr(params: &MmseParams, stream_power: f64) -> Result<f64> {
    let solution = solve_mmse(params, C64::new(-params.sigma2, 0.0))?;
    let second = solve_mmse_second_order(params, &solution)?;
    Ok(stream_power * solution.rho.norm_sqr() / (second.rho4 + params.sigma2 * second.rho2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(alpha: f64, sigma2: f64, signature: SignatureKind) -> MmseParams {
        MmseParams {
            alpha,
            beta: 1.0,
            sigma2,
            power: ScalarDistribution::point_mass(1.0),
            channel: ScalarDistribution::point_mass(1.0),
            signature,
        }
    }

    #[test]
    fn flat_channel_value() {
        let s = mmse_sinr(&flat(0.5, 0.1, SignatureKind::Iid), 1.0).unwrap();
        assert!((s - 5.742).abs() < 5e-4);
    }

    #[test]
    fn isometric_requires_low_load() {
        assert!(solve_mmse(&flat(1.5, 0.1, SignatureKind::Isometric), C64::new(-0.1, 0.0)).is_err());
    }

    #[test]
    fn alternate_sinr_agrees() {
        for sig in [SignatureKind::Iid, SignatureKind::Isometric] {
            let p = flat(0.7, 0.2, sig);
            let a = mmse_sinr(&p, 1.0).unwrap();
            let b = alternate_mmse_sinr(&p, 1.0).unwrap();
            assert!((a - b).abs() < 1e-9 * a, "{sig:?}: {a} vs {b}");
        }
    }
}
