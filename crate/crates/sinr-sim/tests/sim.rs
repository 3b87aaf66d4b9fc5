//! Finite-system sampling, receivers and trial statistics.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sinr_core::als::{als_stieltjes, ReceiverMode, TrainingKind};
use sinr_core::distributions::{ScalarDistribution, WindowSpec};
use sinr_core::mmse::{mmse_sinr, mmse_stieltjes, MmseParams, SignatureKind};
use sinr_core::to_db;
use sinr_sim::receivers::{received_covariance, sample_covariance};
use sinr_sim::system::{circulant, fir_spectrum};
use sinr_sim::{
    als_filter_empirical, build_system, empirical_stieltjes, mmse_filter_empirical, run_trials, sample_haar_columns,
    sample_iid_matrix, ChannelPreset, EntryLaw, Modulation, Receiver, SimError, TrialConfig, C64,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn haar_columns_are_orthonormal() {
    let mut g = rng(1);
    let scalar = sample_haar_columns(1, 1, &mut g).unwrap();
    assert!((scalar[(0, 0)].norm() - 1.0).abs() < 1e-14);
    let s = sample_haar_columns(64, 32, &mut g).unwrap();
    assert!(max_abs(&(s.adjoint() * &s - DMatrix::identity(32, 32))) < 1e-12);
    assert!(matches!(sample_haar_columns(3, 4, &mut g), Err(SimError::Config(_))));
}

#[test]
fn haar_entry_statistics() {
    // For Haar columns in dimension n: E|s|^2 = 1/n and E|s|^4 = 2/(n(n+1)),
    // for the columns themselves and after any fixed unitary rotation.
    let n = 4;
    let dft = DMatrix::from_fn(n, n, |r, c| {
        C64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * std::f64::consts::PI * (r * c) as f64 / n as f64)
    });
    let mut g = rng(2);
    let (mut second, mut fourth, mut rotated, mut phase) = (vec![], vec![], vec![], vec![]);
    for _ in 0..1000 {
        let s = sample_haar_columns(n, 2, &mut g).unwrap();
        let u = &dft * &s;
        second.push(s[(0, 0)].norm_sqr() * n as f64);
        fourth.push(s[(1, 1)].norm_sqr().powi(2));
        rotated.push(u[(2, 1)].norm_sqr().powi(2));
        phase.push(s[(0, 0)].re);
    }
    let expected_fourth = 2.0 / (n * (n + 1)) as f64;
    for (values, expected) in [(&second, 1.0), (&fourth, expected_fourth), (&rotated, expected_fourth), (&phase, 0.0)] {
        let (mean, se) = mean_and_stderr(values);
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} ({se})");
    }
}

#[test]
fn iid_matrices_have_the_model_statistics() {
    let mut g = rng(3);
    for law in [EntryLaw::QpskScaled, EntryLaw::Gaussian] {
        let x = sample_iid_matrix(200, 100, &mut g, law);
        let entries: Vec<f64> = x.iter().map(|c| c.norm_sqr() * 200.0).collect();
        let (mean, se) = mean_and_stderr(&entries);
        assert!((mean - 1.0).abs() < 4.0 * se.max(1e-12), "{law:?}: {mean}");
        let real: Vec<f64> = x.iter().map(|c| c.re).collect();
        let (centre, se) = mean_and_stderr(&real);
        assert!(centre.abs() < 4.0 * se);
        // Largest singular value squared approaches (1 + sqrt(k/n))^2; the
        // edge fluctuates on the scale n^(-2/3).
        let big = sample_iid_matrix(800, 400, &mut g, law);
        let largest = big.singular_values().max();
        assert!((largest * largest / (1.0 + 0.5f64.sqrt()).powi(2) - 1.0).abs() < 0.05);
    }
    let one = sample_iid_matrix(1, 1, &mut g, EntryLaw::QpskScaled);
    assert!((one[(0, 0)].norm() - 1.0).abs() < 1e-15);
}

#[test]
fn presets_build_the_documented_channels() {
    let config = TrialConfig::new(ChannelPreset::proakis_c(), 32, 1.0);
    let sys = build_system(&config, 0).unwrap();
    assert_eq!((sys.m(), sys.n(), sys.k()), (32, 32, 32));
    let column: Vec<f64> = sys.h.column(0).iter().map(|c| c.re).collect();
    assert_eq!(&column[..6], &[0.227, 0.46, 0.688, 0.46, 0.227, 0.0]);
    assert!(column[6..].iter().all(|&v| v == 0.0));
    assert_eq!(sys.h, circulant(&[0.227, 0.46, 0.688, 0.46, 0.227].map(|t| C64::new(t, 0.0)), 32));
    assert_eq!(sys.s, DMatrix::identity(32, 32));

    // The Gram eigenvalues of a circulant are the DFT magnitudes squared.
    let mut eig: Vec<f64> = (&sys.h * sys.h.adjoint()).symmetric_eigenvalues().iter().copied().collect();
    let taps: Vec<C64> = [0.227, 0.46, 0.688, 0.46, 0.227].iter().map(|&t| C64::new(t, 0.0)).collect();
    let mut spectrum = fir_spectrum(&taps, 32);
    eig.sort_by(f64::total_cmp);
    spectrum.sort_by(f64::total_cmp);
    assert!(eig.iter().zip(&spectrum).all(|(a, b)| (a - b).abs() < 1e-12));

    let sys = build_system(&TrialConfig::new(ChannelPreset::RichMimo, 16, 0.5), 0).unwrap();
    assert_eq!(sys.h, DMatrix::identity(16, 16));
    assert_eq!(sys.k(), 8);

    let mut gains = Vec::new();
    for trial in 0..40 {
        let sys = build_system(&TrialConfig::new(ChannelPreset::CdmaRayleigh, 32, 0.5), trial).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                if r != c {
                    assert_eq!(sys.h[(r, c)], C64::new(0.0, 0.0));
                }
            }
            gains.push(sys.h[(r, r)].norm_sqr());
        }
    }
    let (mean, se) = mean_and_stderr(&gains);
    assert!((mean - 1.0).abs() < 3.0 * se);
    // Exponential law: standard deviation equals the mean.
    let sd = se * (gains.len() as f64).sqrt();
    assert!((sd - 1.0).abs() < 0.1);
}

#[test]
fn training_and_window_structure() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 16, 0.5);
    config.signature = SignatureKind::Isometric;
    config.training = TrainingKind::Orthogonal;
    config.window = WindowSpec::Exponential { lbar: 2.0 };
    let sys = build_system(&config, 3).unwrap();
    let i = sys.i();
    assert!(max_abs(&(sys.s.adjoint() * &sys.s - DMatrix::identity(8, 8))) < 1e-10);
    let gram = &sys.training * sys.training.adjoint();
    assert!(max_abs(&(gram - DMatrix::identity(8, 8) * C64::new(i as f64, 0.0))) < 1e-10);
    let forgetting = 1.0 - 4.0 / (2.0 * i as f64);
    for (m, &w) in sys.weights.iter().enumerate() {
        assert!((w - forgetting.powi((i - 1 - m) as i32)).abs() < 1e-15);
    }

    // More streams than training intervals: orthogonal time samples.
    config.alpha = 2.0;
    config.signature = SignatureKind::Iid;
    config.eta = 1.5;
    let sys = build_system(&config, 0).unwrap();
    let (k, i) = (sys.k(), sys.i());
    let gram = sys.training.adjoint() * &sys.training;
    assert!(max_abs(&(gram - DMatrix::identity(i, i) * C64::new(k as f64, 0.0))) < 1e-10);
}

#[test]
fn single_unobstructed_stream_sees_the_snr() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 8, 0.125);
    config.receiver = Receiver::Mmse;
    let mut sys = build_system(&config, 0).unwrap();
    sys.s = DMatrix::from_fn(8, 1, |r, _| C64::new(if r == 0 { 1.0 } else { 0.0 }, 0.0));
    assert!((mmse_filter_empirical(&sys).unwrap()[0] - 10.0).abs() < 1e-10);
}

#[test]
fn mimo_mmse_matches_the_large_system_value() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 64, 0.5);
    config.receiver = Receiver::Mmse;
    config.trials = 50;
    config.seed = 11;
    let report = run_trials(&config).unwrap();
    assert!((report.mean_sinr_db - report.asymptotic_sinr_db).abs() < 0.3);
    let direct = mmse_sinr(&config.mmse_params().unwrap(), 1.0).unwrap();
    assert!((report.asymptotic_sinr - direct).abs() < 1e-12 * direct);
}

#[test]
fn cyclic_prefix_equaliser_matches_the_isometric_mapping() {
    let mut config = TrialConfig::new(ChannelPreset::proakis_c(), 64, 1.0);
    config.receiver = Receiver::Mmse;
    config.sigma2 = 0.01;
    config.trials = 1;
    let report = run_trials(&config).unwrap();
    let taps: Vec<C64> = [0.227, 0.46, 0.688, 0.46, 0.227].iter().map(|&t| C64::new(t, 0.0)).collect();
    let params = MmseParams {
        alpha: 1.0,
        beta: 1.0,
        sigma2: 0.01,
        power: ScalarDistribution::point_mass(1.0),
        channel: ScalarDistribution::empirical(fir_spectrum(&taps, 64)).unwrap(),
        signature: SignatureKind::Isometric,
    };
    let analytic = to_db(mmse_sinr(&params, 1.0).unwrap());
    assert!((report.mean_sinr_db - analytic).abs() < 0.5, "{} vs {analytic}", report.mean_sinr_db);
}

#[test]
fn long_training_approaches_mmse() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 16, 0.5);
    config.eta = 50.0;
    config.trials = 20;
    // Training-based filters only: the semi-blind loss (zeta - 1) S decays
    // much more slowly with the training length.
    {
        let mode = ReceiverMode::Training;
        let mut gap = Vec::new();
        for trial in 0..config.trials {
            let sys = build_system(&config, trial).unwrap();
            let als = als_filter_empirical(&sys).unwrap();
            let mmse = mmse_filter_empirical(&sys).unwrap();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            gap.push(to_db(mean(&mmse)) - to_db(mean(&als)));
        }
        let (mean_gap, _) = mean_and_stderr(&gap);
        assert!((0.0..0.2).contains(&mean_gap), "{mode:?}: {mean_gap}");
    }
}

#[test]
fn silent_stream_has_zero_semi_blind_sinr() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 16, 0.5);
    config.mode = ReceiverMode::SemiBlind;
    let mut sys = build_system(&config, 0).unwrap();
    sys.amplitudes[0] = 0.0;
    let sinr = als_filter_empirical(&sys).unwrap();
    assert_eq!(sinr[0], 0.0);
    assert!(sinr[1] > 0.0);
}

#[test]
fn unloaded_short_training_is_singular() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 16, 0.5);
    config.mu = 0.0;
    config.eta = 0.5;
    let sys = build_system(&config, 0).unwrap();
    assert!(matches!(als_filter_empirical(&sys), Err(SimError::Singular(_))));
}

#[test]
fn trials_are_reproducible() {
    let mut config = TrialConfig::new(ChannelPreset::CdmaRayleigh, 16, 0.5);
    config.trials = 30;
    config.seed = 77;
    let first = run_trials(&config).unwrap();
    assert_eq!(first, run_trials(&config).unwrap());
    config.seed = 78;
    let other = run_trials(&config).unwrap();
    assert_ne!(first.records, other.records);
    let spread = (first.stderr_sinr.powi(2) + other.stderr_sinr.powi(2)).sqrt();
    assert!((first.mean_sinr - other.mean_sinr).abs() < 4.0 * spread);
}

#[test]
fn data_alphabet_does_not_matter() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 32, 0.5);
    config.trials = 60;
    let qpsk = run_trials(&config).unwrap();
    config.modulation = Modulation::Gaussian;
    let gaussian = run_trials(&config).unwrap();
    let spread = (qpsk.stderr_sinr.powi(2) + gaussian.stderr_sinr.powi(2)).sqrt();
    assert!((qpsk.mean_sinr - gaussian.mean_sinr).abs() < 4.0 * spread);
}

/// Stieltjes transform of the Marchenko–Pastur law of `(1/n) X X^†` for an
/// `n × k` Gaussian `X` (large-system ratio `k/n`).
fn marchenko_pastur(ratio: f64, z: C64) -> C64 {
    // z g^2 + (z + 1 - ratio) g + 1 = 0, root in the upper half-plane.
    let b = z + 1.0 - ratio;
    let disc = (b * b - z * 4.0).sqrt();
    let roots = [(-b + disc) / (z * 2.0), (-b - disc) / (z * 2.0)];
    if roots[0].im > 0.0 {
        roots[0]
    } else {
        roots[1]
    }
}

#[test]
fn wishart_spectrum_matches_marchenko_pastur() {
    let mut g = rng(5);
    let z = C64::new(0.5, 0.2);
    let x = sample_iid_matrix(256, 128, &mut g, EntryLaw::Gaussian);
    let empirical = empirical_stieltjes(&(&x * x.adjoint()), z);
    // Rows: n = 256, entries variance 1/n, ratio k/n.
    let expected = marchenko_pastur(0.5, z);
    assert!((empirical - expected).norm() < 0.02 * expected.norm(), "{empirical} vs {expected}");
    let analytic = mmse_stieltjes(
        &MmseParams {
            alpha: 0.5,
            beta: 1.0,
            sigma2: 0.1,
            power: ScalarDistribution::point_mass(1.0),
            channel: ScalarDistribution::point_mass(1.0),
            signature: SignatureKind::Iid,
        },
        z,
    )
    .unwrap();
    assert!((analytic - expected).norm() < 1e-10 * expected.norm());
}

#[test]
fn sample_covariance_spectrum_matches_the_large_system_transform() {
    let mut config = TrialConfig::new(ChannelPreset::CdmaRayleigh, 128, 0.5);
    config.eta = 3.0;
    config.window = WindowSpec::Exponential { lbar: 2.0 };
    config.sigma2 = 0.1;
    let z = C64::new(-0.1, 0.05);
    let empirical: Vec<C64> = (0..4)
        .map(|trial| empirical_stieltjes(&sample_covariance(&build_system(&config, trial).unwrap(), false), z))
        .collect();
    let mean = empirical.iter().sum::<C64>() / empirical.len() as f64;
    let analytic = als_stieltjes(&config.als_params().unwrap(), z).unwrap();
    assert!((mean - analytic).norm() < 0.03 * analytic.norm(), "{mean} vs {analytic}");

    let cov = received_covariance(&build_system(&config, 0).unwrap());
    let shifted = cov - DMatrix::identity(128, 128) * C64::new(0.1, 0.0);
    let mean = empirical_stieltjes(&shifted, z);
    let analytic = mmse_stieltjes(&config.mmse_params().unwrap(), z).unwrap();
    assert!((mean - analytic).norm() < 0.05 * analytic.norm(), "{mean} vs {analytic}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 16, 0.5);
    config.trials = 0;
    assert!(matches!(run_trials(&config), Err(SimError::Config(_))));
    let mut config = TrialConfig::new(ChannelPreset::RichMimo, 0, 0.5);
    config.trials = 1;
    assert!(matches!(run_trials(&config), Err(SimError::Config(_))));
}
