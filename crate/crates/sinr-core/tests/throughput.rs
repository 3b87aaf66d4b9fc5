//! Training-length optimisation for block transmission.

use sinr_core::als::{AlsParams, ReceiverMode, TrainingKind};
use sinr_core::distributions::{ScalarDistribution, WindowSpec};
use sinr_core::mmse::SignatureKind;
use sinr_core::throughput::{normalized_capacity, optimize_training, BlockConfig, CapacityConvention};
use sinr_core::Error;

fn cdma(alpha: f64, ell: f64, training: TrainingKind) -> BlockConfig {
    BlockConfig {
        als: AlsParams {
            alpha,
            beta: 1.0,
            eta: 1.0,
            sigma2: 0.1,
            mu: 0.0,
            power: ScalarDistribution::point_mass(1.0),
            channel: ScalarDistribution::exponential(1.0).unwrap(),
            window: WindowSpec::Rectangular,
            signature: SignatureKind::Iid,
            training,
            mode: ReceiverMode::Training,
        },
        ell,
        ebn0_db: 10.0,
        convention: CapacityConvention::PerChip,
    }
}

fn mimo(alpha: f64, training: TrainingKind) -> BlockConfig {
    let mut config = cdma(alpha, 15.0, training);
    config.als.channel = ScalarDistribution::point_mass(1.0);
    config.convention = CapacityConvention::PerStream;
    config
}

#[test]
fn capacity_vanishes_at_the_feasibility_edges() {
    let config = cdma(0.5, 15.0, TrainingKind::Iid);
    let interior = normalized_capacity(&config, 4.0).unwrap().capacity;
    assert!(interior > 0.0);
    assert!(normalized_capacity(&config, 15.0 * (1.0 - 1e-6)).unwrap().capacity < 1e-4 * interior);
    // Close to eta = beta the training-limited rate cannot sustain the fixed
    // energy per bit and the throughput collapses.
    assert!(normalized_capacity(&config, 1.01).unwrap().capacity < 1e-2 * interior);
    assert!(matches!(normalized_capacity(&config, 15.0), Err(Error::Domain(_))));
    assert!(matches!(normalized_capacity(&config, 0.5), Err(Error::IllPosed(_))));
}

#[test]
fn self_consistent_noise_level() {
    let config = cdma(0.5, 15.0, TrainingKind::Iid);
    let point = normalized_capacity(&config, 4.0).unwrap();
    let ebn0 = 10f64.powf(1.0);
    assert!((point.sigma2 * ebn0 * point.rate_effective - 1.0).abs() < 1e-8);
    let rate = (1.0 + point.sinr).log2() * (1.0 - 4.0 / 15.0);
    assert!((rate - point.rate_effective).abs() < 1e-12);
    assert!((point.capacity - 0.5 * point.rate_effective).abs() < 1e-15);
}

#[test]
fn interior_optimum_for_each_load() {
    for alpha in [0.25, 0.5, 0.75] {
        let optimum = optimize_training(&cdma(alpha, 15.0, TrainingKind::Iid)).unwrap();
        let curve = &optimum.curve;
        let first = curve.first().unwrap();
        let last = curve.last().unwrap();
        assert!(optimum.eta_star > first.eta && optimum.eta_star < last.eta, "alpha={alpha}");
        assert!(curve.iter().all(|p| p.capacity <= optimum.capacity_star + 1e-12));
        let step = curve[1].eta - curve[0].eta;
        let config = cdma(alpha, 15.0, TrainingKind::Iid);
        for eta in [optimum.eta_star - step, optimum.eta_star + step] {
            assert!(normalized_capacity(&config, eta).unwrap().capacity <= optimum.capacity_star);
        }
    }
}

#[test]
fn longer_blocks_train_longer_but_relatively_less() {
    let short = optimize_training(&cdma(0.5, 15.0, TrainingKind::Iid)).unwrap();
    let long = optimize_training(&cdma(0.5, 60.0, TrainingKind::Iid)).unwrap();
    assert!(long.eta_star > short.eta_star);
    assert!(long.eta_star / 60.0 < short.eta_star / 15.0);
    assert!(long.capacity_star > short.capacity_star);
}

#[test]
fn orthogonal_training_wins_for_short_training() {
    for alpha in [0.25, 0.5, 0.75] {
        let iid = cdma(alpha, 15.0, TrainingKind::Iid);
        let orthogonal = cdma(alpha, 15.0, TrainingKind::Orthogonal);
        for eta in [1.2, 1.5, 2.0, 3.0] {
            let a = normalized_capacity(&iid, eta).unwrap().capacity;
            let b = normalized_capacity(&orthogonal, eta).unwrap().capacity;
            assert!(b >= a, "alpha={alpha} eta={eta}: {b} < {a}");
        }
        let best_iid = optimize_training(&iid).unwrap().capacity_star;
        let best_orthogonal = optimize_training(&orthogonal).unwrap().capacity_star;
        assert!(best_orthogonal >= best_iid);
    }
}

#[test]
fn heavily_loaded_orthogonal_training_covers_all_streams() {
    let optimum = optimize_training(&mimo(4.0, TrainingKind::Orthogonal)).unwrap();
    assert!(optimum.eta_star >= 4.0, "eta* = {}", optimum.eta_star);
}

#[test]
fn vanishing_load_carries_nothing_per_chip() {
    let point = normalized_capacity(&cdma(1e-4, 15.0, TrainingKind::Iid), 4.0).unwrap();
    assert!(point.capacity < 1e-3);
    assert!(point.rate_effective > 1.0);
}
