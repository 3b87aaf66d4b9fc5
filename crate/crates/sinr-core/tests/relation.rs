//! Window-shape factor, MMSE-to-ALS conversion and capacity gaps.

use approx::assert_relative_eq;
use proptest::prelude::*;
use sinr_core::als::{als_transient_sinr, AlsParams, ReceiverMode, TrainingKind};
use sinr_core::distributions::{ScalarDistribution, WindowSpec};
use sinr_core::mmse::{mmse_sinr, SignatureKind};
use sinr_core::relation::{
    als_from_mmse, capacity_gap, poor_wang_zeta, zeta_steady, zeta_steady_generic, zeta_table, zeta_transient,
    zeta_transient_generic, ZetaContext,
};
use sinr_core::rootfind::{expand_bracket, solve_1d, Bracket, SolveOptions};
use sinr_core::Error;

const MODES: [ReceiverMode; 2] = [ReceiverMode::Training, ReceiverMode::SemiBlind];

fn exponential_window(lbar: f64) -> WindowSpec {
    WindowSpec::Exponential { lbar }
}

/// Transient exponential-window shape factor, evaluated directly.
fn exponential_transient_formula(beta: f64, eta: f64, lbar: f64) -> f64 {
    beta * (1.0 - (-eta / lbar).exp())
        / (lbar * (1.0 - ((beta - eta) / lbar).exp()) * (1.0 - (-beta / lbar).exp()))
}

fn exponential_steady_formula(beta: f64, lbar: f64) -> f64 {
    beta / (lbar * (1.0 - (-beta / lbar).exp()))
}

#[test]
fn transient_examples() {
    assert_relative_eq!(zeta_transient(1.0, 3.0, &WindowSpec::Rectangular).unwrap().zeta, 1.5, max_relative = 1e-14);
    let long = zeta_transient(1.0, 1e9, &WindowSpec::Rectangular).unwrap().zeta;
    assert!((long - 1.0).abs() < 1e-8);

    let zeta = zeta_transient(1.0, 2.0, &exponential_window(1.0)).unwrap().zeta;
    let expected = (1.0 - (-2.0f64).exp()) / (1.0 - (-1.0f64).exp()).powi(2);
    assert_relative_eq!(zeta, expected, max_relative = 1e-12);
    assert!((zeta - 2.164).abs() < 5e-4);
}

#[test]
fn transient_needs_more_training_than_dimensions() {
    for eta in [0.5, 1.0] {
        assert!(matches!(zeta_transient(1.0, eta, &WindowSpec::Rectangular), Err(Error::Domain(_))));
    }
}

#[test]
fn steady_examples() {
    let unit = zeta_steady(1.0, &exponential_window(1.0)).unwrap().zeta;
    assert_relative_eq!(unit, 1.0 / (1.0 - (-1.0f64).exp()), max_relative = 1e-14);
    assert!((unit - 1.5820).abs() < 5e-5);
    let wide = zeta_steady(2.0, &exponential_window(1.0)).unwrap().zeta;
    assert_relative_eq!(wide, 2.0 / (1.0 - (-2.0f64).exp()), max_relative = 1e-14);
    assert!((wide - 2.3130).abs() < 5e-5);
    assert!((zeta_steady(1.0, &exponential_window(1e9)).unwrap().zeta - 1.0).abs() < 1e-8);
    assert!(matches!(zeta_steady(1.0, &WindowSpec::Rectangular), Err(Error::Domain(_))));
}

#[test]
fn closed_forms_match_the_generic_path() {
    for beta in [0.25, 0.5, 1.0, 2.0] {
        for eta in [1.1 * beta + 0.1, 3.0, 10.0, 40.0] {
            let windows = [WindowSpec::Rectangular, exponential_window(0.5), exponential_window(5.0)];
            for window in windows {
                let closed = zeta_transient(beta, eta, &window).unwrap();
                let generic = zeta_transient_generic(beta, eta, &window).unwrap();
                assert_relative_eq!(closed.zeta, generic.zeta, max_relative = 1e-10);
                if let WindowSpec::Exponential { lbar } = window {
                    assert_relative_eq!(closed.zeta, exponential_transient_formula(beta, eta, lbar), max_relative = 1e-10);
                } else {
                    assert_relative_eq!(closed.zeta, 1.0 + beta / (eta - beta), max_relative = 1e-12);
                }
            }
        }
        for lbar in [0.5, 1.0, 5.0, 20.0] {
            let closed = zeta_steady(beta, &exponential_window(lbar)).unwrap().zeta;
            let generic = zeta_steady_generic(beta, &exponential_window(lbar)).unwrap().zeta;
            assert_relative_eq!(closed, generic, max_relative = 1e-10);
            assert_relative_eq!(closed, exponential_steady_formula(beta, lbar), max_relative = 1e-12);
        }
    }
}

#[test]
fn conversion_examples() {
    let perfect = ZetaContext::from_zeta(1.0).unwrap();
    let half = ZetaContext::from_zeta(1.5).unwrap();
    for mode in MODES {
        assert_relative_eq!(als_from_mmse(7.0, &perfect, mode), 7.0, max_relative = 1e-15);
        assert_eq!(capacity_gap(7.0, &perfect, mode), 0.0);
    }
    assert_relative_eq!(als_from_mmse(10.0, &half, ReceiverMode::Training), 10.0 / 1.55, max_relative = 1e-15);
    assert!((als_from_mmse(10.0, &half, ReceiverMode::Training) - 6.4516).abs() < 1e-4);
    assert_relative_eq!(als_from_mmse(10.0, &half, ReceiverMode::SemiBlind), 10.0 / 6.5, max_relative = 1e-15);
    assert!((als_from_mmse(10.0, &half, ReceiverMode::SemiBlind) - 1.5385).abs() < 1e-4);
    assert!(ZetaContext::from_zeta(0.9).is_err());
}

#[test]
fn capacity_gap_examples() {
    let half = ZetaContext::from_zeta(1.5).unwrap();
    let gap = capacity_gap(10.0, &half, ReceiverMode::SemiBlind);
    assert_relative_eq!(gap, (1.0 + 10.0 / 3.0f64).ln(), max_relative = 1e-14);
    assert!((gap - 1.466).abs() < 5e-4);
    let huge = ZetaContext::from_zeta(1e12).unwrap();
    for mode in MODES {
        assert!((capacity_gap(10.0, &huge, mode) - 11f64.ln()).abs() < 1e-9);
    }
    // The gap is the capacity difference of the two receivers.
    for mode in MODES {
        let direct = 11f64.ln() - (1.0 + als_from_mmse(10.0, &half, mode)).ln();
        assert_relative_eq!(capacity_gap(10.0, &half, mode), direct, max_relative = 1e-12);
    }
}

#[test]
fn poor_wang_examples() {
    let approx_one = poor_wang_zeta(1.0).unwrap();
    assert_relative_eq!(approx_one, 1.5, max_relative = 1e-15);
    let approx_ten = poor_wang_zeta(10.0).unwrap();
    assert_relative_eq!(approx_ten, 1.05, max_relative = 1e-15);
    let exact_ten = zeta_steady(1.0, &exponential_window(10.0)).unwrap().zeta;
    assert_relative_eq!(exact_ten, 1.0 / (10.0 * (1.0 - (-0.1f64).exp())), max_relative = 1e-13);
    assert!((exact_ten - 1.0508).abs() < 5e-5);
    assert!((poor_wang_zeta(1e12).unwrap() - 1.0).abs() < 1e-11);
    assert!(poor_wang_zeta(0.0).is_err());
    for lbar in [5.0, 8.0, 20.0, 100.0] {
        let exact = zeta_steady(1.0, &exponential_window(lbar)).unwrap().zeta;
        assert!((exact - poor_wang_zeta(lbar).unwrap()).abs() / exact < 0.02);
    }
}

#[test]
fn table_covers_the_grid() {
    let rows = zeta_table(&[0.5, 1.0], &[1.0, 5.0, 10.0], Some(4.0)).unwrap();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let expected = exponential_transient_formula(row.beta, 4.0, row.lbar);
        assert_relative_eq!(row.zeta, expected, max_relative = 1e-10);
        assert_relative_eq!(row.zeta_poor_wang, 1.0 + 0.5 / row.lbar, max_relative = 1e-15);
    }
}

fn system(channel: ScalarDistribution, sigma2: f64, eta: f64, window: WindowSpec) -> AlsParams {
    AlsParams {
        alpha: 0.5,
        beta: 1.0,
        eta,
        sigma2,
        mu: 0.0,
        power: ScalarDistribution::point_mass(1.0),
        channel,
        window,
        signature: SignatureKind::Iid,
        training: TrainingKind::Iid,
        mode: ReceiverMode::Training,
    }
}

#[test]
fn conversion_matches_the_full_pipeline() {
    for window in [WindowSpec::Rectangular, exponential_window(2.0)] {
        for signature in [SignatureKind::Iid, SignatureKind::Isometric] {
            let mut params = system(ScalarDistribution::exponential(1.0).unwrap(), 0.1, 3.0, window.clone());
            params.signature = signature;
            let ctx = zeta_transient(1.0, 3.0, &window).unwrap();
            let s = mmse_sinr(&params.mmse_equivalent(), 1.0).unwrap();
            for mode in MODES {
                let full = als_transient_sinr(&AlsParams { mode, ..params.clone() }, 1.0).unwrap().sinr;
                assert_relative_eq!(full, als_from_mmse(s, &ctx, mode), max_relative = 1e-6);
            }
        }
    }
}

#[test]
fn transient_response_is_channel_independent() {
    let window = exponential_window(3.0);
    let flat = system(ScalarDistribution::point_mass(1.0), 0.1, 2.5, window.clone());
    let target = mmse_sinr(&flat.mmse_equivalent(), 1.0).unwrap();
    let faded = |sigma2: f64| system(ScalarDistribution::exponential(1.0).unwrap(), sigma2, 2.5, window.clone());
    let gap = |sigma2: f64| mmse_sinr(&faded(sigma2).mmse_equivalent(), 1.0).map(|s| s.ln() - target.ln());
    let (lo, hi) = expand_bracket(|x: f64| gap(x.exp()), -10.0, 2.0, 40).unwrap();
    let root = solve_1d(
        |x: f64| gap(x.exp()),
        Bracket::Interval(lo, hi),
        SolveOptions {
            tolerance: 1e-14,
            max_iterations: 200,
        },
    )
    .unwrap();
    let tuned = faded(root.root[0].re.exp());
    assert_relative_eq!(mmse_sinr(&tuned.mmse_equivalent(), 1.0).unwrap(), target, max_relative = 1e-10);
    for mode in MODES {
        let a = als_transient_sinr(&AlsParams { mode, ..flat.clone() }, 1.0).unwrap().sinr;
        let b = als_transient_sinr(&AlsParams { mode, ..tuned.clone() }, 1.0).unwrap().sinr;
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }
}

proptest! {
    #[test]
    fn conversion_is_monotone(s in 0.01f64..100.0, zeta in 1.0f64..10.0, ds in 0.01f64..1.0, dz in 0.01f64..1.0) {
        let ctx = ZetaContext::from_zeta(zeta).unwrap();
        let worse = ZetaContext::from_zeta(zeta + dz).unwrap();
        for mode in MODES {
            prop_assert!(als_from_mmse(s * (1.0 + ds), &ctx, mode) > als_from_mmse(s, &ctx, mode));
            prop_assert!(als_from_mmse(s, &worse, mode) < als_from_mmse(s, &ctx, mode));
            prop_assert!(als_from_mmse(s, &ctx, mode) <= s * (1.0 + 1e-15));
            prop_assert!(capacity_gap(s, &ctx, mode) >= 0.0);
        }
    }

    #[test]
    fn zeta_decreases_toward_one(beta in 0.1f64..3.0, extra in 0.05f64..20.0, lbar in 0.3f64..30.0) {
        let eta = beta + extra;
        for window in [WindowSpec::Rectangular, exponential_window(lbar)] {
            let short = zeta_transient(beta, eta, &window).unwrap().zeta;
            let long = zeta_transient(beta, eta * 1.5, &window).unwrap().zeta;
            prop_assert!(short >= 1.0 && long <= short * (1.0 + 1e-12));
        }
        let steady = zeta_steady(beta, &exponential_window(lbar)).unwrap().zeta;
        let longer = zeta_steady(beta, &exponential_window(lbar * 2.0)).unwrap().zeta;
        prop_assert!(steady > 1.0 && longer < steady);
    }
}
