//! Root finders on closed-form problems and against a plain-iteration oracle.

mod oracle;

use approx::assert_relative_eq;
use oracle::tse_hanly_rho;
use proptest::prelude::*;
use sinr_core::als::{solve_als_first, AlsParams, ReceiverMode, TrainingKind};
use sinr_core::distributions::{ScalarDistribution, WindowSpec};
use sinr_core::mmse::SignatureKind;
use sinr_core::rootfind::{damped_fixed_point, solve_1d, solve_2d, Bracket, SolveOptions};
use sinr_core::{Error, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn tight() -> SolveOptions {
    SolveOptions {
        tolerance: 1e-12,
        max_iterations: 500,
    }
}

#[test]
fn one_dimensional_examples() {
    let linear = solve_1d(|x| Ok(x - 2.0), Bracket::Interval(0.0, 5.0), tight()).unwrap();
    assert_relative_eq!(linear.root[0].re, 2.0, epsilon = 1e-12);
    assert!(linear.converged);

    let (alpha, sigma2) = (0.5, 0.1);
    let rho = solve_1d(
        |r| Ok(r * (sigma2 + alpha / (1.0 + r)) - 1.0),
        Bracket::Interval(0.0, 1.0 / sigma2),
        tight(),
    )
    .unwrap();
    assert_relative_eq!(rho.root[0].re, tse_hanly_rho(alpha, sigma2), max_relative = 1e-11);
    assert_relative_eq!(rho.root[0].re, 5.741_657_386_773_941, max_relative = 1e-11);

    let cubic = solve_1d(|x| Ok(x * x * x), Bracket::Seed(1.0), tight()).unwrap();
    assert!(cubic.root[0].re.abs() < 1e-4 && cubic.residual_norm < 1e-12);
}

#[test]
fn two_dimensional_examples() {
    let affine = solve_2d(|x| Ok([x[0] - 1.0, x[1] + 2.0]), [c(0.0), c(0.0)], tight()).unwrap();
    assert!((affine.root[0] - 1.0).norm() < 1e-12 && (affine.root[1] + 2.0).norm() < 1e-12);

    let circle = solve_2d(|x| Ok([x[0] * x[0] + x[1] * x[1] - 1.0, x[0] - x[1]]), [c(1.0), c(0.0)], tight()).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((circle.root[0] - h).norm() < 1e-10 && (circle.root[1] - h).norm() < 1e-10);
}

#[test]
fn fixed_point_examples() {
    let affine = damped_fixed_point(|x| Ok(vec![x[0] * 0.5 + 1.0]), &[c(0.0)], 1.0, tight()).unwrap();
    assert!((affine.root[0] - 2.0).norm() < 1e-10);

    let (alpha, sigma2) = (0.5, 0.1);
    let rho = damped_fixed_point(|x| Ok(vec![(c(sigma2) + alpha / (x[0] + 1.0)).inv()]), &[c(1.0)], 0.5, tight())
        .unwrap();
    assert_relative_eq!(rho.root[0].re, tse_hanly_rho(alpha, sigma2), max_relative = 1e-10);

    let flip = damped_fixed_point(|x| Ok(vec![-x[0]]), &[c(1.0)], 1.0, tight());
    assert!(matches!(flip, Err(Error::NonConvergence { .. })));
}

#[test]
fn seven_variable_system_converges_to_its_fixed_point() {
    // Damped iteration of the ALS first-order equations is the oracle; the
    // production solver must reach the same point with a tiny residual.
    let params = AlsParams {
        alpha: 0.5,
        beta: 1.0,
        eta: 2.0,
        sigma2: 0.1,
        mu: 0.1,
        power: ScalarDistribution::point_mass(1.0),
        channel: ScalarDistribution::point_mass(1.0),
        window: WindowSpec::Rectangular,
        signature: SignatureKind::Iid,
        training: TrainingKind::Iid,
        mode: ReceiverMode::Training,
    };
    let first = solve_als_first(&params).unwrap();
    assert!(first.gamma_equation_residual(&params) < 1e-10);

    // Independent iteration for flat channel, unit powers, rectangular window,
    // i.i.d. S and B, where every expectation is a single atom.
    let (alpha, beta, eta, sigma2) = (0.5, 1.0, 2.0, 0.1);
    let z = -params.mu / eta;
    let (mut rho, mut r, mut gamma) = (1.0 / sigma2, beta / (eta - beta), 1.0 / sigma2);
    for _ in 0..200_000 {
        let w11 = 1.0 / (1.0 + r);
        let nu = 1.0 / (sigma2 * w11 - z);
        let psi = 1.0 - w11;
        let x_e = rho * w11;
        let ea11 = 1.0 / (1.0 + x_e);
        let omega = alpha / eta * rho * ea11;
        let tau = alpha + alpha * (psi - 1.0) * ea11;
        let x_h = -nu * (tau - alpha);
        let ha11 = 1.0 / (1.0 + x_h);
        let rho_next = nu * beta * ha11;
        let r_next = omega + beta / eta * sigma2 * gamma;
        let gamma_next = (eta * r * w11 / beta - 1.0) / z;
        let d = 0.02;
        let shift = (rho_next - rho).abs() + (r_next - r).abs() + (gamma_next - gamma).abs();
        rho += d * (rho_next - rho);
        r += d * (r_next - r);
        gamma += d * (gamma_next - gamma);
        if shift < 1e-14 {
            break;
        }
    }
    assert_relative_eq!(first.rho.re, rho, max_relative = 1e-9);
    assert_relative_eq!(first.r.re, r, max_relative = 1e-9);
    assert_relative_eq!(first.gamma.re, gamma, max_relative = 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracketing_and_iteration_agree_on_contractions(slope in -0.8f64..0.8, offset in -3.0f64..3.0, bend in 0.0f64..0.1) {
        // g(x) = slope x + offset + bend sin x is a contraction.
        let g = |x: f64| slope * x + offset + bend * x.sin();
        let tol = 1e-12;
        let opts = SolveOptions { tolerance: tol, max_iterations: 5000 };
        let bracketed = solve_1d(|x| Ok(x - g(x)), Bracket::Interval(-50.0, 50.0), opts).unwrap().root[0].re;
        let iterated = damped_fixed_point(|x| Ok(vec![c(g(x[0].re))]), &[c(0.0)], 1.0, opts).unwrap().root[0].re;
        prop_assert!((bracketed - iterated).abs() <= 10.0 * tol * (1.0 + bracketed.abs()));
    }

    #[test]
    fn reported_residual_is_evaluated_at_the_root(a in 0.5f64..4.0, b in -2.0f64..2.0) {
        let f = |x: f64| a * x * x * x + x - b;
        let report = solve_1d(|x| Ok(f(x)), Bracket::Interval(-10.0, 10.0), SolveOptions::default()).unwrap();
        prop_assert_eq!(report.residual_norm, f(report.root[0].re).abs());
        prop_assert!(report.converged && report.residual_norm < SolveOptions::default().tolerance);
    }
}
