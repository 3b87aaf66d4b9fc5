//! Limiting eigenvalue distributions and the expectations built on them.
//!
//! The large-system equations only see the stream powers `P`, the channel
//! eigenvalues `H` and the window weights `W` through expectations of the form
//! `E[X^m / (1 + x X)]` and `E[X^m / |1 + x X|^2]`. This module provides the
//! distributions, those *ratio moments*, and closed forms for the exponential
//! channel and the window laws.

use crate::quadrature::{integrate, QuadratureTolerance};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Tolerance on the total probability of a discrete distribution.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;
/// The exponential law is integrated over `[0, EXPONENTIAL_SPAN * mean]`.
const EXPONENTIAL_SPAN: f64 = 40.0;
/// Below this `|r|` the exponential-window closed forms lose digits to
/// cancellation and quadrature is used instead.
const WINDOW_SERIES_RADIUS: f64 = 1e-3;
/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A non-negative scalar random variable describing a limiting eigenvalue
/// distribution.
///
/// Construct through [`ScalarDistribution::point_masses`],
/// [`ScalarDistribution::exponential`] or [`ScalarDistribution::empirical`]
/// (which validate their input) or deserialize from JSON:
///
/// ```json
/// {"kind": "point_masses", "values": [1.0, 0.5], "weights": [0.75, 0.25]}
/// {"kind": "exponential", "mean": 1.0}
/// {"kind": "empirical", "samples": [0.2, 1.3, 0.9]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "snake_case",
    deny_unknown_fields,
    try_from = "RawDistribution"
)]
pub enum ScalarDistribution {
    /// Finite mixture of point masses.
    PointMasses {
        /// Support points (non-negative).
        values: Vec<f64>,
        /// Probabilities, summing to one.
        weights: Vec<f64>,
    },
    /// Exponential law with the given mean.
    Exponential {
        /// Mean (positive).
        mean: f64,
    },
    /// Uniform mixture over a set of samples.
    Empirical {
        /// Observed values (non-negative).
        samples: Vec<f64>,
    },
}

/// Unvalidated mirror used for deserialization.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDistribution {
    PointMasses { values: Vec<f64>, weights: Vec<f64> },
    Exponential { mean: f64 },
    Empirical { samples: Vec<f64> },
}

impl TryFrom<RawDistribution> for ScalarDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw {
            RawDistribution::PointMasses { values, weights } => Self::point_masses(values, weights),
            RawDistribution::Exponential { mean } => Self::exponential(mean),
            RawDistribution::Empirical { samples } => Self::empirical(samples),
        }
    }
}

impl ScalarDistribution {
    /// Validated mixture of point masses.
    pub fn point_masses(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let dist = Self::PointMasses { values, weights };
        dist.validate()?;
        Ok(dist)
    }

    /// A single atom at `value` (which should be positive).
    pub fn point_mass(value: f64) -> Self {
        Self::PointMasses {
            values: vec![value],
            weights: vec![1.0],
        }
    }

    /// Validated exponential law.
    pub fn exponential(mean: f64) -> Result<Self> {
        let dist = Self::Exponential { mean };
        dist.validate()?;
        Ok(dist)
    }

    /// Validated empirical law.
    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        let dist = Self::Empirical { samples };
        dist.validate()?;
        Ok(dist)
    }

    /// Checks weights, support and non-triviality.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidDistribution(msg.to_string()));
        match self {
            Self::PointMasses { values, weights } => {
                if values.is_empty() {
                    return bad("point masses need at least one value");
                }
                if values.len() != weights.len() {
                    return bad("values and weights differ in length");
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("support must be finite and non-negative");
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("weights must be finite and non-negative");
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                    return Err(Error::InvalidDistribution(format!(
                        "weights sum to {total}, not 1"
                    )));
                }
                let nonzero_mass: f64 = values
                    .iter()
                    .zip(weights)
                    .filter(|(v, _)| **v > 0.0)
                    .map(|(_, w)| *w)
                    .sum();
                if nonzero_mass <= 0.0 {
                    return bad("all mass is at zero");
                }
                Ok(())
            }
            Self::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return bad("exponential mean must be positive and finite");
                }
                Ok(())
            }
            Self::Empirical { samples } => {
                if samples.is_empty() {
                    return bad("empirical law needs at least one sample");
                }
                if samples.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("support must be finite and non-negative");
                }
                if samples.iter().all(|v| *v == 0.0) {
                    return bad("all mass is at zero");
                }
                Ok(())
            }
        }
    }

    /// Mean `E[X]`.
    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Raw moment `E[X^m]` (exact for every variant).
    pub fn moment(&self, m: i32) -> f64 {
        match self {
            Self::PointMasses { values, weights } => values
                .iter()
                .zip(weights)
                .map(|(v, w)| w * v.powi(m))
                .sum(),
            Self::Exponential { mean } => {
                let factorial: f64 = (1..=m.max(0)).map(f64::from).product();
                factorial * mean.powi(m)
            }
            Self::Empirical { samples } => {
                samples.iter().map(|v| v.powi(m)).sum::<f64>() / samples.len() as f64
            }
        }
    }

    /// Iterates over `(value, probability)` for the discrete variants.
    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::PointMasses { values, weights } => {
                Some(values.iter().copied().zip(weights.iter().copied()).collect())
            }
            Self::Empirical { samples } => {
                let p = 1.0 / samples.len() as f64;
                Some(samples.iter().map(|v| (*v, p)).collect())
            }
            Self::Exponential { .. } => None,
        }
    }

    /// `E[f(X)]` for a vector-valued integrand.
    ///
    /// Discrete laws are summed exactly; the exponential law is integrated
    /// adaptively over `[0, 40 * mean]` (the neglected tail carries
    /// probability `e^-40`). `hint` is an optional interior point where the
    /// integrand is known to vary sharply.
    pub fn expect_with_hint<const K: usize, F>(&self, f: F, hint: Option<f64>) -> Result<[C64; K]>
    where
        F: Fn(f64) -> [C64; K],
    {
        if let Some(atoms) = self.atoms() {
            let mut acc = [C64::new(0.0, 0.0); K];
            for (v, p) in atoms {
                let fv = f(v);
                for c in 0..K {
                    acc[c] += fv[c] * p;
                }
            }
            return Ok(acc);
        }
        let Self::Exponential { mean } = *self else {
            unreachable!("discrete variants handled above")
        };
        let mut breaks = vec![0.0, 1.0, 3.0, 8.0, 16.0, EXPONENTIAL_SPAN];
        if let Some(h) = hint {
            let t = h / mean;
            if t > 1e-9 && t < EXPONENTIAL_SPAN - 1e-9 {
                breaks.push(t);
                breaks.sort_by(f64::total_cmp);
                breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            }
        }
        let est = integrate(
            |t| {
                let weight = (-t).exp();
                let mut v = f(mean * t);
                for c in v.iter_mut() {
                    *c *= weight;
                }
                v
            },
            &breaks,
            QuadratureTolerance::default(),
        );
        if !est.converged {
            return Err(Error::NonConvergence {
                context: "adaptive quadrature of an exponential expectation".into(),
                iterations: QuadratureTolerance::default().max_intervals,
                residual: est.error,
                best: est.value.to_vec(),
            });
        }
        Ok(est.value)
    }

    /// `E[f(X)]` for a scalar complex integrand.
    pub fn expect<F>(&self, f: F) -> Result<C64>
    where
        F: Fn(f64) -> C64,
    {
        Ok(self.expect_with_hint(|x| [f(x)], None)?[0])
    }

    /// Rejects `x` when `1 + x X` vanishes somewhere on the support.
    fn check_pole(&self, x: C64) -> Result<Option<f64>> {
        match self.atoms() {
            Some(atoms) => {
                for (v, _) in atoms {
                    let d = C64::new(1.0, 0.0) + x * v;
                    if d.norm() <= 1e-13 * (1.0 + (x * v).norm()) {
                        return Err(Error::Singularity(format!(
                            "1 + x X vanishes at X = {v} for x = {x}"
                        )));
                    }
                }
                Ok(None)
            }
            None => {
                if x.re < 0.0 && x.im == 0.0 {
                    return Err(Error::Singularity(format!(
                        "1 + x X vanishes at X = {} for x = {x}",
                        -1.0 / x.re
                    )));
                }
                // Location of the closest approach to the pole, if on the support.
                let near = (-C64::new(1.0, 0.0) / x).re;
                Ok((x.re < 0.0 && near > 0.0).then_some(near))
            }
        }
    }

    /// `E[X^m / (1 + x X)]`.
    pub fn ratio_moment_1(&self, m: i32, x: C64) -> Result<C64> {
        let hint = self.check_pole(x)?;
        Ok(self.expect_with_hint(
            |v| [C64::new(v.powi(m), 0.0) / (C64::new(1.0, 0.0) + x * v)],
            hint,
        )?[0])
    }

    /// `E[X^m / |1 + x X|^2]`.
    pub fn ratio_moment_2(&self, m: i32, x: C64) -> Result<f64> {
        let hint = self.check_pole(x)?;
        Ok(self.expect_with_hint(
            |v| [C64::new(v.powi(m) / (C64::new(1.0, 0.0) + x * v).norm_sqr(), 0.0)],
            hint,
        )?[0]
            .re)
    }

    /// First-order ratio moments `E[X^m/(1+xX)]` for `m = 0, 1`.
    ///
    /// The exponential law uses the exponential-integral closed form.
    pub fn first_order_moments(&self, x: C64) -> Result<[C64; 2]> {
        let hint = self.check_pole(x)?;
        if let Self::Exponential { mean } = *self {
            let m1 = exponential_channel_h11(x * mean)? * mean;
            return Ok([C64::new(1.0, 0.0) - x * m1, m1]);
        }
        self.expect_with_hint(
            |v| {
                let q = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) + x * v);
                [q, q * v]
            },
            hint,
        )
    }

    /// Second-order ratio moments `E[X^m/|1+xX|^2]` for `m = 0, 1, 2`.
    pub fn second_order_moments(&self, x: C64) -> Result<[f64; 3]> {
        let hint = self.check_pole(x)?;
        let v = self.expect_with_hint(
            |v| {
                let q = 1.0 / (C64::new(1.0, 0.0) + x * v).norm_sqr();
                [C64::new(q, 0.0), C64::new(q * v, 0.0), C64::new(q * v * v, 0.0)]
            },
            hint,
        )?;
        Ok([v[0].re, v[1].re, v[2].re])
    }
}

/// `e^w E1(w)`, where `E1(w) = ∫_1^∞ e^{-w t} / t dt` is the exponential
/// integral. Power series for `|w| < 1`, Lentz continued fraction otherwise.
pub fn scaled_exponential_integral(w: C64) -> C64 {
    if w.norm() < 1.0 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.0, 0.0);
        for k in 1..80 {
            term *= -w / k as f64;
            let contribution = -term / k as f64;
            sum += contribution;
            if contribution.norm() < 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        let e1 = -EULER_GAMMA - w.ln() + sum;
        return w.exp() * e1;
    }
    // Even contraction of the continued fraction for E1 (modified Lentz).
    let tiny = C64::new(1e-30, 0.0);
    let mut b = w + 1.0;
    let mut c = C64::new(1.0, 0.0) / tiny;
    let mut d = C64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = C64::new(1.0, 0.0) / (d * an + b);
        c = b + c.inv() * an;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// `E[H / (1 + x H)]` for a mean-one exponential `H`, in closed form
/// `(1 - f(x)) / x` with `f(x) = x^{-1} e^{1/x} E1(1/x)`; tends to one as
/// `x -> 0`.
pub fn exponential_channel_h11(x: C64) -> Result<C64> {
    if x.re < 0.0 && x.im == 0.0 {
        return Err(Error::Singularity(format!(
            "1 + x H vanishes on the support for x = {x}"
        )));
    }
    if x.norm() < 1e-4 {
        // E[H/(1+xH)] = sum_k (-x)^k (k+1)!
        let mut sum = C64::new(0.0, 0.0);
        let mut power = C64::new(1.0, 0.0);
        let mut factorial = 1.0;
        for k in 0..6 {
            factorial *= (k + 1) as f64;
            sum += power * factorial;
            power *= -x;
        }
        return Ok(sum);
    }
    let w = x.inv();
    let f = w * scaled_exponential_integral(w);
    Ok((C64::new(1.0, 0.0) - f) / x)
}

/// Shape of the data window applied by the adaptive receiver.
///
/// JSON forms: `{"kind":"rectangular"}`, `{"kind":"exponential","lbar":5.0}`
/// and `{"kind":"custom","distribution":{...}}`. `lbar` is the window length
/// normalised by the transmit dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    /// All training intervals weighted equally (`W = I`).
    Rectangular,
    /// Exponential forgetting with normalised effective length `lbar`.
    Exponential {
        /// Normalised effective window length.
        lbar: f64,
    },
    /// Arbitrary limiting weight distribution at the given training length.
    Custom {
        /// Limiting distribution of the window weights.
        distribution: ScalarDistribution,
    },
}

/// Limiting distribution of the window weights at a given normalised training
/// length.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowLaw {
    /// All weights equal to one.
    Unit,
    /// Density `scale / w` on `[lower, 1]`, where `lower = e^{-eta/lbar}` and
    /// `scale = lbar / eta`.
    Exponential {
        /// Lower end of the support.
        lower: f64,
        /// `lbar / eta`.
        scale: f64,
    },
    /// User-supplied law.
    Custom(ScalarDistribution),
}

/// Window ratio moments `W_{m,n} = E[W^m / (1 + r W)^n]` (the `n = 2` ones
/// with `|.|^2`) and the mean weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMoments {
    /// `E[1/(1+rW)]`.
    pub w01: C64,
    /// `E[W/(1+rW)]`.
    pub w11: C64,
    /// `E[W/|1+rW|^2]`.
    pub w12: f64,
    /// `E[W^2/|1+rW|^2]`.
    pub w22: f64,
    /// `E[W]`.
    pub mean: f64,
}

/// Builds the limiting window law for normalised training length `eta`.
pub fn window_distribution(spec: &WindowSpec, eta: f64) -> Result<WindowLaw> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::domain(format!("training length eta = {eta} must be positive")));
    }
    match spec {
        WindowSpec::Rectangular => Ok(WindowLaw::Unit),
        WindowSpec::Exponential { lbar } => {
            if !(lbar.is_finite() && *lbar > 0.0) {
                return Err(Error::domain(format!("window length lbar = {lbar} must be positive")));
            }
            Ok(WindowLaw::Exponential {
                lower: (-eta / lbar).exp(),
                scale: lbar / eta,
            })
        }
        WindowSpec::Custom { distribution } => {
            distribution.validate()?;
            Ok(WindowLaw::Custom(distribution.clone()))
        }
    }
}

/// Closed-form window moments at coupling `r` (rectangular and exponential
/// windows; custom laws fall back to direct expectation).
pub fn window_moments_closed_form(spec: &WindowSpec, eta: f64, r: C64) -> Result<WindowMoments> {
    window_distribution(spec, eta)?.moments(r)
}

impl WindowLaw {
    /// Cumulative distribution function.
    pub fn cdf(&self, w: f64) -> f64 {
        match self {
            Self::Unit => {
                if w >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Exponential { lower, scale } => {
                // Closed at the lower end so that F(lower) is exactly zero
                // (the logarithm need not round to -1/scale there).
                if w <= *lower {
                    0.0
                } else if w >= 1.0 {
                    1.0
                } else {
                    (1.0 + scale * w.ln()).clamp(0.0, 1.0)
                }
            }
            Self::Custom(dist) => match dist.atoms() {
                Some(atoms) => atoms.iter().filter(|(v, _)| *v <= w).map(|(_, p)| p).sum(),
                None => {
                    let ScalarDistribution::Exponential { mean } = dist else {
                        unreachable!()
                    };
                    if w <= 0.0 {
                        0.0
                    } else {
                        1.0 - (-w / mean).exp()
                    }
                }
            },
        }
    }

    /// Mean weight `E[W]`.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::Exponential { lower, scale } => scale * (1.0 - lower),
            Self::Custom(dist) => dist.mean(),
        }
    }

    /// `E[f(W)]` by direct integration (used near `r = 0` and for checks).
    pub fn expect<const K: usize, F>(&self, f: F) -> Result<[C64; K]>
    where
        F: Fn(f64) -> [C64; K],
    {
        match self {
            Self::Unit => Ok(f(1.0)),
            Self::Exponential { lower, scale } => {
                // Substituting w = e^t turns the density scale/w into scale dt.
                let lo = lower.ln();
                let est = integrate(
                    |t| {
                        let mut v = f(t.exp());
                        for c in v.iter_mut() {
                            *c *= *scale;
                        }
                        v
                    },
                    &[lo, 0.5 * lo, 0.0],
                    QuadratureTolerance::default(),
                );
                Ok(est.value)
            }
            Self::Custom(dist) => dist.expect_with_hint(f, None),
        }
    }

    fn moments_by_quadrature(&self, r: C64) -> Result<WindowMoments> {
        let v = self.expect(|w| {
            let q = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) + r * w);
            let q2 = q.norm_sqr();
            [q, q * w, C64::new(w * q2, 0.0), C64::new(w * w * q2, 0.0)]
        })?;
        Ok(WindowMoments {
            w01: v[0],
            w11: v[1],
            w12: v[2].re,
            w22: v[3].re,
            mean: self.mean(),
        })
    }

    /// Window moments at coupling `r`.
    pub fn moments(&self, r: C64) -> Result<WindowMoments> {
        let one = C64::new(1.0, 0.0);
        match self {
            Self::Unit => {
                let d = one + r;
                if d.norm() < 1e-14 {
                    return Err(Error::Singularity("1 + r vanishes for the unit window".into()));
                }
                Ok(WindowMoments {
                    w01: d.inv(),
                    w11: d.inv(),
                    w12: 1.0 / d.norm_sqr(),
                    w22: 1.0 / d.norm_sqr(),
                    mean: 1.0,
                })
            }
            Self::Exponential { lower, scale } => {
                if r.im == 0.0 && r.re <= -1.0 && r.re >= -1.0 / lower {
                    return Err(Error::Singularity(format!(
                        "1 + r W vanishes on the window support for r = {r}"
                    )));
                }
                if r.norm() < WINDOW_SERIES_RADIUS {
                    return self.moments_by_quadrature(r);
                }
                let mean = scale * (1.0 - lower);
                let ratio = (one + r) / (one + r * *lower);
                // `1 - W01` directly: W01 is close to one for short windows.
                let log_ratio = ratio.ln() * *scale;
                let w01 = one - log_ratio;
                let w11 = log_ratio / r;
                let w12 = if r.im.abs() <= 1e-9 * r.norm() {
                    mean / ((1.0 + r.re) * (1.0 + lower * r.re))
                } else {
                    scale * ratio.ln().im / r.im
                };
                let w22 = ((w11 - w12) / r.conj()).re;
                Ok(WindowMoments {
                    w01,
                    w11,
                    w12,
                    w22,
                    mean,
                })
            }
            Self::Custom(dist) => {
                let first = dist.first_order_moments(r)?;
                let second = dist.second_order_moments(r)?;
                Ok(WindowMoments {
                    w01: first[0],
                    w11: first[1],
                    w12: second[1],
                    w22: second[2],
                    mean: dist.mean(),
                })
            }
        }
    }
}

/// Steady-state (infinitely long training) window moments for an exponential
/// window of normalised length `lbar`: the limits of `eta * W_{m,n}`, i.e.
/// moments of the measure `lbar dw / w` on `(0, 1]`.
///
/// `w01` is reported as `1 - r * w11`, the value that keeps the first-order
/// identities intact after the moments have been rescaled by `eta`.
pub fn steady_exponential_moments(lbar: f64, r: C64) -> Result<WindowMoments> {
    if !(lbar.is_finite() && lbar > 0.0) {
        return Err(Error::domain(format!("window length lbar = {lbar} must be positive")));
    }
    let one = C64::new(1.0, 0.0);
    if r.im == 0.0 && r.re <= -1.0 {
        return Err(Error::Singularity(format!(
            "1 + r w vanishes on the steady-state window support for r = {r}"
        )));
    }
    let (w11, w12, w22) = if r.norm() < WINDOW_SERIES_RADIUS {
        let est = integrate(
            |w| {
                let q = one / (one + r * w);
                let q2 = q.norm_sqr();
                [q * lbar, C64::new(lbar * q2, 0.0), C64::new(lbar * w * q2, 0.0)]
            },
            &[0.0, 0.5, 1.0],
            QuadratureTolerance::default(),
        );
        (est.value[0], est.value[1].re, est.value[2].re)
    } else {
        let log = (one + r).ln();
        let w11 = log * lbar / r;
        let w12 = if r.im.abs() <= 1e-9 * r.norm() {
            lbar / (1.0 + r.re)
        } else {
            lbar * log.im / r.im
        };
        let w22 = ((w11 - w12) / r.conj()).re;
        (w11, w12, w22)
    };
    Ok(WindowMoments {
        w01: one - r * w11,
        w11,
        w12,
        w22,
        mean: lbar,
    })
}
