//! Independent numerical oracles shared by the integration tests. Nothing
//! here calls into the crate under test.

#![allow(dead_code)]

use sinr_core::C64;

/// Adaptive Simpson quadrature of a real integrand on `[a, b]`.
pub fn integrate_real(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    // Split into panels so that sharp features are resolved.
    let panels = 64;
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * width;
            let hi = lo + width;
            let (flo, fhi) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(&f, lo, flo, hi, fhi);
            recurse(&f, lo, flo, hi, fhi, whole, m, fm, 1e-15, 40)
        })
        .sum()
}

/// Adaptive Simpson quadrature of a complex integrand.
pub fn integrate_complex(f: impl Fn(f64) -> C64, a: f64, b: f64) -> C64 {
    C64::new(integrate_real(|x| f(x).re, a, b), integrate_real(|x| f(x).im, a, b))
}

/// Exponential integral `E1(x) = -gamma - ln x - sum_k (-x)^k / (k k!)`
/// by its power series (accurate for moderate `x`).
pub fn exponential_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let next = term / k as f64;
        sum += next;
        if next.abs() < 1e-18 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Scalar fixed point of `rho = 1 / (sigma2 + alpha / (1 + rho))` by plain
/// iteration to machine precision.
pub fn tse_hanly_rho(alpha: f64, sigma2: f64) -> f64 {
    let mut rho = 1.0 / sigma2;
    for _ in 0..100_000 {
        let next = 1.0 / (sigma2 + alpha / (1.0 + rho));
        if (next - rho).abs() <= 1e-15 * next {
            return next;
        }
        rho = next;
    }
    rho
}

/// Stieltjes transform `(1/N) tr (S S^† - z)^{-1}` for an `N x (ratio N)`
/// matrix `S` with i.i.d. entries of variance `1/N` (Marchenko–Pastur law):
/// the root of `z g^2 + (z + 1 - ratio) g + 1 = 0` in the upper half-plane.
pub fn marchenko_pastur_stieltjes(ratio: f64, z: C64) -> C64 {
    let b = z + 1.0 - ratio;
    let disc = (b * b - z * 4.0).sqrt();
    let candidates = [(-b + disc) / (z * 2.0), (-b - disc) / (z * 2.0)];
    *candidates
        .iter()
        .filter(|g| g.im > 0.0)
        .max_by(|a, b| a.im.total_cmp(&b.im))
        .unwrap_or(&candidates[0])
}
