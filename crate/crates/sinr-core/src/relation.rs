//! Closed relationship between the MMSE and ALS output SINRs.
//!
//! With i.i.d. training symbols and no diagonal loading, the ALS SINR
//! depends on the system only through the MMSE SINR `S` and a scalar
//! `zeta >= 1` determined by the window shape and the ratio `beta / eta`:
//!
//! * training: `S / (zeta + (zeta - 1) / S)`,
//! * semi-blind: `S / (zeta + (zeta - 1) S)`.
//!
//! `zeta = W11 / W12` with the window coupling `r` fixed by
//! `eta (1 - W01(r)) = beta`; in the steady state the rescaled moments are
//! used instead.

use crate::als::ReceiverMode;
use crate::distributions::{steady_exponential_moments, window_distribution, WindowSpec};
use crate::rootfind::{expand_bracket, solve_1d, Bracket, SolveOptions};
use crate::{Error, Result, C64};
use serde::Serialize;

/// Window-shape factor together with the quantities it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaContext {
    /// Receive dimensions per transmit dimension.
    pub beta: f64,
    /// Normalised training length (`None` for the steady state).
    pub eta: Option<f64>,
    /// Window that produced `zeta`.
    pub window: WindowSpec,
    /// Window-shape factor, at least one.
    pub zeta: f64,
    /// Window coupling fixed by the training length.
    pub r: f64,
}

impl ZetaContext {
    /// Context for an explicitly given `zeta` (no window information).
    pub fn from_zeta(zeta: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta >= 1.0) {
            return Err(Error::domain(format!("zeta = {zeta} must be at least one")));
        }
        Ok(Self {
            beta: f64::NAN,
            eta: None,
            window: WindowSpec::Rectangular,
            zeta,
            r: f64::NAN,
        })
    }

    /// ALS SINR implied by the MMSE SINR `sinr_mmse`.
    pub fn als_sinr(&self, sinr_mmse: f64, mode: ReceiverMode) -> f64 {
        if sinr_mmse <= 0.0 {
            return 0.0;
        }
        let zeta = self.zeta;
        match mode {
            ReceiverMode::Training => sinr_mmse / (zeta + (zeta - 1.0) / sinr_mmse),
            ReceiverMode::SemiBlind => sinr_mmse / (zeta + (zeta - 1.0) * sinr_mmse),
        }
    }

    /// Capacity lost per stream by the ALS receiver, `ln(1 + S) - ln(1 + S_als)`,
    /// in nats.
    pub fn capacity_gap(&self, sinr_mmse: f64, mode: ReceiverMode) -> f64 {
        let s = sinr_mmse.max(0.0);
        let shortfall = 1.0 - 1.0 / self.zeta;
        match mode {
            ReceiverMode::SemiBlind => (shortfall * s).ln_1p(),
            ReceiverMode::Training => (shortfall / ((s - 1.0) / self.zeta + 1.0) * s).ln_1p(),
        }
    }
}

fn check_beta_eta(beta: f64, eta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::domain(format!("beta = {beta} must be positive")));
    }
    if !(eta.is_finite() && eta > beta) {
        return Err(Error::domain(format!(
            "the training length eta = {eta} must exceed beta = {beta}"
        )));
    }
    Ok(())
}

fn positive_lbar(lbar: f64) -> Result<()> {
    if lbar.is_finite() && lbar > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("window length lbar = {lbar} must be positive")))
    }
}

/// Solves `f(r) = 0` for an increasing `f` with `f(0) < 0` on `(0, 1e6)`,
/// extending the bracket if necessary.
fn increasing_root(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (lo, hi) = expand_bracket(&f, 0.0, 1e6, 40)?;
    let report = solve_1d(
        &f,
        Bracket::Interval(lo, hi),
        SolveOptions {
            tolerance: 1e-16,
            max_iterations: 400,
        },
    )?;
    Ok(report.root[0].re)
}

/// Transient `zeta` through the generic moment path: invert
/// `eta (1 - W01(r)) = beta` and take `W11(r) / W12(r)`.
pub fn zeta_transient_generic(beta: f64, eta: f64, window: &WindowSpec) -> Result<ZetaContext> {
    check_beta_eta(beta, eta)?;
    let law = window_distribution(window, eta)?;
    let target = beta / eta;
    // 1 - W01 = r W11, which avoids cancellation for small r.
    let r = increasing_root(|r| Ok((law.moments(C64::new(r, 0.0))?.w11 * r).re - target))?;
    let moments = law.moments(C64::new(r, 0.0))?;
    Ok(ZetaContext {
        beta,
        eta: Some(eta),
        window: window.clone(),
        zeta: moments.w11.re / moments.w12,
        r,
    })
}

/// Transient `zeta` after `eta N` training intervals (`eta > beta`), using
/// closed forms for rectangular and exponential windows.
pub fn zeta_transient(beta: f64, eta: f64, window: &WindowSpec) -> Result<ZetaContext> {
    check_beta_eta(beta, eta)?;
    match window {
        WindowSpec::Rectangular => Ok(ZetaContext {
            beta,
            eta: Some(eta),
            window: window.clone(),
            zeta: 1.0 + beta / (eta - beta),
            // 1/(1 + r) = 1 - beta/eta.
            r: beta / (eta - beta),
        }),
        WindowSpec::Exponential { lbar } => {
            positive_lbar(*lbar)?;
            let lbar = *lbar;
            // (1 + r)/(1 + r e^{-eta/lbar}) = e^{beta/lbar}.
            let gain = (beta / lbar).exp();
            let floor = (-eta / lbar).exp();
            let r = (gain - 1.0) / (1.0 - gain * floor);
            let zeta = beta * (-(eta / lbar)).exp_m1().abs()
                / (lbar * ((beta - eta) / lbar).exp_m1().abs() * (-(beta / lbar)).exp_m1().abs());
            Ok(ZetaContext {
                beta,
                eta: Some(eta),
                window: window.clone(),
                zeta,
                r,
            })
        }
        WindowSpec::Custom { .. } => zeta_transient_generic(beta, eta, window),
    }
}

/// Steady-state `zeta` through the rescaled moments: invert
/// `r W11~(r) = beta` and take `W11~ / W12~`.
pub fn zeta_steady_generic(beta: f64, window: &WindowSpec) -> Result<ZetaContext> {
    let lbar = steady_lbar(beta, window)?;
    let r = increasing_root(|r| Ok((steady_exponential_moments(lbar, C64::new(r, 0.0))?.w11 * r).re - beta))?;
    let moments = steady_exponential_moments(lbar, C64::new(r, 0.0))?;
    Ok(ZetaContext {
        beta,
        eta: None,
        window: window.clone(),
        zeta: moments.w11.re / moments.w12,
        r,
    })
}

fn steady_lbar(beta: f64, window: &WindowSpec) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::domain(format!("beta = {beta} must be positive")));
    }
    match window {
        WindowSpec::Exponential { lbar } => {
            positive_lbar(*lbar)?;
            Ok(*lbar)
        }
        WindowSpec::Rectangular => Err(Error::domain(
            "a rectangular window has no fixed length; its steady state is the MMSE receiver",
        )),
        WindowSpec::Custom { .. } => Err(Error::domain(
            "steady-state limits are available for exponential windows only",
        )),
    }
}

/// Steady-state `zeta = beta / (lbar (1 - e^{-beta/lbar}))` of a
/// fixed-length exponential window.
pub fn zeta_steady(beta: f64, window: &WindowSpec) -> Result<ZetaContext> {
    let lbar = steady_lbar(beta, window)?;
    let x = beta / lbar;
    Ok(ZetaContext {
        beta,
        eta: None,
        window: window.clone(),
        zeta: x / -(-x).exp_m1(),
        r: x.exp_m1(),
    })
}

/// ALS SINR implied by the MMSE SINR (i.i.d. training, no loading).
pub fn als_from_mmse(sinr_mmse: f64, ctx: &ZetaContext, mode: ReceiverMode) -> f64 {
    ctx.als_sinr(sinr_mmse, mode)
}

/// Per-stream capacity difference between MMSE and ALS receivers, in nats.
pub fn capacity_gap(sinr_mmse: f64, ctx: &ZetaContext, mode: ReceiverMode) -> f64 {
    ctx.capacity_gap(sinr_mmse, mode)
}

/// Large-system form `1 + 1/(2 lbar)` of the classical exponentially
/// windowed RLS misadjustment approximation.
pub fn poor_wang_zeta(lbar: f64) -> Result<f64> {
    positive_lbar(lbar)?;
    Ok(1.0 + 0.5 / lbar)
}

/// One row of a `zeta` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaRow {
    /// Receive dimensions per transmit dimension.
    pub beta: f64,
    /// Training length (`None` for the steady state).
    pub eta: Option<f64>,
    /// Exponential window length.
    pub lbar: f64,
    /// Window-shape factor.
    pub zeta: f64,
    /// Classical approximation `1 + 1/(2 lbar)`.
    pub zeta_poor_wang: f64,
}

/// Tabulates `zeta` for exponential windows over a `(beta, lbar)` grid, at
/// training length `eta` or in the steady state when `eta` is `None`.
pub fn zeta_table(betas: &[f64], lbars: &[f64], eta: Option<f64>) -> Result<Vec<ZetaRow>> {
    let mut rows = Vec::with_capacity(betas.len() * lbars.len());
    for &beta in betas {
        for &lbar in lbars {
            let window = WindowSpec::Exponential { lbar };
            let ctx = match eta {
                Some(eta) => zeta_transient(beta, eta, &window)?,
                None => zeta_steady(beta, &window)?,
            };
            rows.push(ZetaRow {
                beta,
                eta,
                lbar,
                zeta: ctx.zeta,
                zeta_poor_wang: poor_wang_zeta(lbar)?,
            });
        }
    }
    Ok(rows)
}
