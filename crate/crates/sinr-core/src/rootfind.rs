//! Root finders used by the fixed-point solvers.
//!
//! - [`solve_1d`]: bracketed (Illinois false position with bisection
//!   fallback) or seeded secant search for a real scalar root.
//! - [`solve_newton`] / [`solve_2d`]: damped Newton iteration on a vector of
//!   complex unknowns with a finite-difference Jacobian and backtracking.
//! - [`damped_fixed_point`]: relaxed iteration `x <- (1-d) x + d g(x)`.

use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

/// Default convergence tolerance on the residual norm.
pub const DEFAULT_TOLERANCE: f64 = 1e-11;
/// Relative finite-difference step used for Jacobians.
const JACOBIAN_STEP: f64 = 1e-7;
/// Maximum number of step halvings in the Newton line search.
const MAX_HALVINGS: usize = 30;

/// Stopping rules shared by the solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Residual-norm tolerance.
    pub tolerance: f64,
    /// Iteration budget.
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 200,
        }
    }
}

/// Outcome of a successful solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Root (one entry per unknown).
    pub root: Vec<C64>,
    /// Residual norm re-evaluated at `root`.
    pub residual_norm: f64,
    /// Iterations used.
    pub iterations: usize,
    /// Whether the tolerance was met.
    pub converged: bool,
}

/// Starting information for [`solve_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket {
    /// Interval `[lower, upper]` on which the residual changes sign.
    Interval(f64, f64),
    /// Single starting point for an unsafeguarded secant search.
    Seed(f64),
}

fn non_convergence(context: &str, iterations: usize, residual: f64, best: Vec<C64>) -> Error {
    Error::NonConvergence {
        context: context.to_string(),
        iterations,
        residual,
        best,
    }
}

/// Finds a real root of `f`.
///
/// With [`Bracket::Interval`] the iteration keeps a sign-changing bracket and
/// always converges; a bracket without a sign change is rejected. With
/// [`Bracket::Seed`] a plain secant search is performed.
pub fn solve_1d<F>(mut f: F, bracket: Bracket, opts: SolveOptions) -> Result<SolveReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    let report = |x: f64, fx: f64, iterations: usize| SolveReport {
        root: vec![C64::new(x, 0.0)],
        residual_norm: fx.abs(),
        iterations,
        converged: true,
    };
    match bracket {
        Bracket::Interval(lower, upper) => {
            let (mut a, mut b) = (lower.min(upper), lower.max(upper));
            let (mut fa, mut fb) = (f(a)?, f(b)?);
            if fa == 0.0 {
                return Ok(report(a, fa, 0));
            }
            if fb == 0.0 {
                return Ok(report(b, fb, 0));
            }
            if fa.signum() == fb.signum() {
                return Err(non_convergence(
                    &format!("no sign change on [{a}, {b}]"),
                    0,
                    fa.abs().min(fb.abs()),
                    vec![C64::new(if fa.abs() < fb.abs() { a } else { b }, 0.0)],
                ));
            }
            // Which end was retained on the previous step (Illinois rule).
            let mut retained = 0i8;
            for iteration in 1..=opts.max_iterations.max(400) {
                let mut x = b - fb * (b - a) / (fb - fa);
                if !x.is_finite() || x <= a || x >= b {
                    x = 0.5 * (a + b);
                }
                let fx = f(x)?;
                let width = b - a;
                if fx.abs() <= opts.tolerance * 1e-2 || width <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                    return Ok(report(x, fx, iteration));
                }
                if fx.signum() == fb.signum() {
                    b = x;
                    fb = fx;
                    if retained == -1 {
                        fa *= 0.5;
                    }
                    retained = -1;
                } else {
                    a = x;
                    fa = fx;
                    if retained == 1 {
                        fb *= 0.5;
                    }
                    retained = 1;
                }
                // Guarantee geometric shrinkage even when false position stalls.
                if (b - a) > 0.5 * width {
                    let m = 0.5 * (a + b);
                    let fm = f(m)?;
                    if fm.signum() == fb.signum() {
                        b = m;
                        fb = fm;
                    } else {
                        a = m;
                        fa = fm;
                    }
                    retained = 0;
                }
            }
            let x = 0.5 * (a + b);
            let fx = f(x)?;
            if fx.abs() <= opts.tolerance {
                return Ok(report(x, fx, opts.max_iterations));
            }
            Err(non_convergence("bracketed search", opts.max_iterations, fx.abs(), vec![C64::new(x, 0.0)]))
        }
        Bracket::Seed(x0) => {
            let mut x_prev = x0;
            let mut x = x0 + JACOBIAN_STEP.max(1e-4) * x0.abs().max(1.0);
            let mut f_prev = f(x_prev)?;
            let mut fx = f(x)?;
            let mut best = if f_prev.abs() < fx.abs() { (x_prev, f_prev) } else { (x, fx) };
            for iteration in 1..=opts.max_iterations {
                if fx.abs() <= opts.tolerance {
                    return Ok(report(x, fx, iteration));
                }
                let denom = fx - f_prev;
                let next = x - fx * (x - x_prev) / denom;
                if !next.is_finite() {
                    break;
                }
                x_prev = x;
                f_prev = fx;
                x = next;
                fx = f(x)?;
                if fx.abs() < best.1.abs() {
                    best = (x, fx);
                }
            }
            Err(non_convergence(
                "secant search",
                opts.max_iterations,
                best.1.abs(),
                vec![C64::new(best.0, 0.0)],
            ))
        }
    }
}

/// Grows `[lower, upper]` geometrically (moving `upper`) until `f` changes
/// sign, returning the sign-changing interval.
pub fn expand_bracket<F>(mut f: F, lower: f64, mut upper: f64, max_doublings: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f_lower = f(lower)?;
    let mut previous = lower;
    for _ in 0..max_doublings {
        let f_upper = f(upper)?;
        if f_upper.signum() != f_lower.signum() || f_upper == 0.0 {
            return Ok((previous, upper));
        }
        previous = upper;
        upper *= 2.0;
    }
    Err(non_convergence(
        "bracket expansion",
        max_doublings,
        f_lower.abs(),
        vec![C64::new(upper, 0.0)],
    ))
}

/// How the Newton Jacobian is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    /// Residual is holomorphic in the unknowns: one complex difference per
    /// unknown.
    Holomorphic,
    /// General residual: real and imaginary parts are perturbed separately.
    RealCoordinates,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn newton_direction(
    residual: &[C64],
    x: &[C64],
    kind: JacobianKind,
    f: &mut dyn FnMut(&[C64]) -> Result<Vec<C64>>,
) -> Result<Option<Vec<C64>>> {
    let n = x.len();
    match kind {
        JacobianKind::Holomorphic => {
            let mut jac = DMatrix::<C64>::zeros(n, n);
            for j in 0..n {
                let step = JACOBIAN_STEP * x[j].norm().max(1e-3);
                let mut probe = x.to_vec();
                probe[j] += step;
                let fp = f(&probe)?;
                for i in 0..n {
                    jac[(i, j)] = (fp[i] - residual[i]) / step;
                }
            }
            let rhs = DVector::from_iterator(n, residual.iter().map(|r| -r));
            Ok(jac.lu().solve(&rhs).filter(|d| d.iter().all(|c| c.is_finite())).map(|d| d.iter().copied().collect()))
        }
        JacobianKind::RealCoordinates => {
            let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
            for j in 0..2 * n {
                let var = j / 2;
                let imaginary = j % 2 == 1;
                let step = JACOBIAN_STEP * x[var].norm().max(1e-3);
                let mut probe = x.to_vec();
                if imaginary {
                    probe[var] += C64::new(0.0, step);
                } else {
                    probe[var] += C64::new(step, 0.0);
                }
                let fp = f(&probe)?;
                for i in 0..n {
                    let d = (fp[i] - residual[i]) / step;
                    jac[(2 * i, j)] = d.re;
                    jac[(2 * i + 1, j)] = d.im;
                }
            }
            let rhs = DVector::from_iterator(2 * n, residual.iter().flat_map(|r| [-r.re, -r.im]));
            Ok(jac
                .lu()
                .solve(&rhs)
                .filter(|d| d.iter().all(|c| c.is_finite()))
                .map(|d| (0..n).map(|i| C64::new(d[2 * i], d[2 * i + 1])).collect()))
        }
    }
}

/// Damped Newton iteration for `f(x) = 0` over complex unknowns.
///
/// Each step solves with a finite-difference Jacobian (relative step `1e-7`)
/// and backtracks by halving up to thirty times until the residual norm
/// decreases. A residual evaluation that fails (for instance because a trial
/// point lands on a pole) counts as a rejected step. When the Jacobian is
/// singular the iterate is perturbed once before giving up.
pub fn solve_newton<F>(mut f: F, seed: &[C64], kind: JacobianKind, opts: SolveOptions) -> Result<SolveReport>
where
    F: FnMut(&[C64]) -> Result<Vec<C64>>,
{
    let mut x = seed.to_vec();
    let mut residual = f(&x)?;
    let mut current = norm(&residual);
    let mut perturbed = false;
    for iteration in 0..opts.max_iterations {
        if current <= opts.tolerance {
            return Ok(SolveReport {
                root: x,
                residual_norm: current,
                iterations: iteration,
                converged: true,
            });
        }
        let direction = match newton_direction(&residual, &x, kind, &mut f)? {
            Some(d) => d,
            None if !perturbed => {
                perturbed = true;
                for v in x.iter_mut() {
                    *v *= 1.0 + 1e-6;
                    *v += 1e-9;
                }
                residual = f(&x)?;
                current = norm(&residual);
                continue;
            }
            None => {
                return Err(non_convergence("Newton iteration (singular Jacobian)", iteration, current, x));
            }
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<C64> = x.iter().zip(&direction).map(|(xi, di)| xi + di * step).collect();
            if let Ok(r) = f(&trial) {
                let trial_norm = norm(&r);
                if trial_norm.is_finite() && trial_norm < current {
                    x = trial;
                    residual = r;
                    current = trial_norm;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            if current <= opts.tolerance * 10.0 {
                // Stagnated at the floating-point floor just above tolerance.
                return Ok(SolveReport {
                    root: x,
                    residual_norm: current,
                    iterations: iteration,
                    converged: true,
                });
            }
            return Err(non_convergence("Newton line search", iteration, current, x));
        }
    }
    if current <= opts.tolerance {
        return Ok(SolveReport {
            root: x,
            residual_norm: current,
            iterations: opts.max_iterations,
            converged: true,
        });
    }
    Err(non_convergence("Newton iteration", opts.max_iterations, current, x))
}

/// Two-unknown convenience wrapper over [`solve_newton`] with a general
/// (real-coordinate) Jacobian.
pub fn solve_2d<F>(mut f: F, seed: [C64; 2], opts: SolveOptions) -> Result<SolveReport>
where
    F: FnMut([C64; 2]) -> Result<[C64; 2]>,
{
    solve_newton(
        |x| f([x[0], x[1]]).map(|r| r.to_vec()),
        &seed,
        JacobianKind::RealCoordinates,
        opts,
    )
}

/// Relaxed fixed-point iteration `x <- (1 - damping) x + damping g(x)`.
///
/// Converges when `|g(x) - x| <= tolerance * (1 + |x|)`.
pub fn damped_fixed_point<G>(mut g: G, seed: &[C64], damping: f64, opts: SolveOptions) -> Result<SolveReport>
where
    G: FnMut(&[C64]) -> Result<Vec<C64>>,
{
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::domain(format!("damping {damping} must lie in (0, 1]")));
    }
    let mut x = seed.to_vec();
    let mut last = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let gx = g(&x)?;
        let diff: Vec<C64> = gx.iter().zip(&x).map(|(a, b)| a - b).collect();
        last = norm(&diff);
        if last <= opts.tolerance * (1.0 + norm(&x)) {
            return Ok(SolveReport {
                root: gx,
                residual_norm: last,
                iterations: iteration,
                converged: true,
            });
        }
        for (xi, gi) in x.iter_mut().zip(&gx) {
            *xi = *xi * (1.0 - damping) + gi * damping;
        }
    }
    Err(non_convergence("damped fixed-point iteration", opts.max_iterations, last, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form positive root of `rho = 1 / (s + a / (1 + rho))`.
    fn flat_channel_root(load: f64, noise: f64) -> f64 {
        let b = noise + load - 1.0;
        (-b + (b * b + 4.0 * noise).sqrt()) / (2.0 * noise)
    }

    #[test]
    fn bracketed_flat_channel_map() {
        let (load, noise) = (0.5, 0.1);
        let rep = solve_1d(
            |r| Ok(r - 1.0 / (noise + load / (1.0 + r))),
            Bracket::Interval(0.0, 1.0 / noise),
            SolveOptions::default(),
        )
        .unwrap();
        let root = rep.root[0].re;
        assert!((root - flat_channel_root(load, noise)).abs() < 1e-12);
        assert!((root - 5.742).abs() < 1e-3);
    }

    #[test]
    fn bracket_without_sign_change_is_rejected() {
        let err = solve_1d(|x| Ok(x * x + 1.0), Bracket::Interval(-1.0, 1.0), SolveOptions::default());
        assert!(matches!(err, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn seeded_secant() {
        let rep = solve_1d(|x| Ok(x.powi(3) - 2.0), Bracket::Seed(1.0), SolveOptions::default()).unwrap();
        assert!((rep.root[0].re - 2f64.cbrt()).abs() < 1e-11);
    }

    #[test]
    fn newton_two_unknowns() {
        // (x^2 + y - 11, x + y^2 - 7) has a root at (3, 2).
        let rep = solve_2d(
            |v| Ok([v[0] * v[0] + v[1] - 11.0, v[0] + v[1] * v[1] - 7.0]),
            [C64::new(2.5, 0.0), C64::new(1.5, 0.0)],
            SolveOptions::default(),
        )
        .unwrap();
        assert!((rep.root[0] - 3.0).norm() < 1e-10);
        assert!((rep.root[1] - 2.0).norm() < 1e-10);
    }

    #[test]
    fn holomorphic_newton_finds_complex_root() {
        let rep = solve_newton(
            |v| Ok(vec![v[0] * v[0] + 1.0]),
            &[C64::new(0.3, 0.8)],
            JacobianKind::Holomorphic,
            SolveOptions::default(),
        )
        .unwrap();
        assert!((rep.root[0] - C64::new(0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn oscillating_map_exhausts_budget() {
        let err = damped_fixed_point(
            |x| Ok(vec![-x[0]]),
            &[C64::new(1.0, 0.0)],
            1.0,
            SolveOptions {
                max_iterations: 50,
                ..SolveOptions::default()
            },
        );
        assert!(matches!(err, Err(Error::NonConvergence { iterations: 50, .. })));
    }

    #[test]
    fn damped_map_converges() {
        let rep = damped_fixed_point(
            |x| Ok(vec![(x[0] + 2.0 / x[0]) * 0.5]),
            &[C64::new(1.0, 0.0)],
            0.7,
            SolveOptions::default(),
        )
        .unwrap();
        assert!((rep.root[0].re - 2f64.sqrt()).abs() < 1e-10);
    }
}
