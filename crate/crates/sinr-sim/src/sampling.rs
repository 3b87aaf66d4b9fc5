//! Random matrix samplers and deterministic random streams.

use crate::{SimError, SimResult, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Random objects drawn per trial; each gets an independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    /// Signature matrix `S`.
    Signature = 0,
    /// Channel matrix `H`.
    Channel = 1,
    /// Training symbols `B`.
    Training = 2,
    /// Receiver noise during training.
    Noise = 3,
}

/// Generator for `(seed, trial, role)`: counter-based, so trials can be
/// evaluated in any order (and in parallel) with identical results.
pub fn stream(seed: u64, trial: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | role as u64);
    rng
}

/// Circularly symmetric complex Gaussian with variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

/// Unit-energy QPSK symbol `(±1 ± j)/√2`.
pub fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let re = if rng.random::<bool>() { h } else { -h };
    let im = if rng.random::<bool>() { h } else { -h };
    C64::new(re, im)
}

/// Entry distribution of an i.i.d. matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryLaw {
    /// `(±1 ± j)/√(2n)`.
    QpskScaled,
    /// Complex Gaussian with variance `1/n`.
    Gaussian,
}

/// `n × k` matrix with i.i.d. zero-mean entries of variance `1/n`.
pub fn sample_iid_matrix<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R, law: EntryLaw) -> DMatrix<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, k, |_, _| match law {
        EntryLaw::QpskScaled => qpsk(rng) * scale,
        EntryLaw::Gaussian => complex_gaussian(rng, 1.0 / n as f64),
    })
}

/// `n × k` matrix with Haar-distributed orthonormal columns (`k <= n`).
///
/// Orthonormalises a complex Gaussian matrix by QR and rotates each column
/// by the phase of the corresponding diagonal entry of `R`, which makes the
/// law exactly Haar rather than QR-convention dependent.
pub fn sample_haar_columns<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> SimResult<DMatrix<C64>> {
    if k > n {
        return Err(SimError::Config(format!(
            "cannot draw {k} orthonormal columns in dimension {n}"
        )));
    }
    if k == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let gaussian = DMatrix::from_fn(n, k, |_, _| complex_gaussian(rng, 1.0));
    let qr = gaussian.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut column = q.column_mut(j);
        column *= phase;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_columns_are_orthonormal() {
        let mut rng = stream(7, 0, Role::Signature);
        let s = sample_haar_columns(64, 32, &mut rng).unwrap();
        let gram = s.adjoint() * &s;
        let defect = (gram - DMatrix::<C64>::identity(32, 32)).norm();
        assert!(defect < 1e-12, "defect {defect}");
    }

    #[test]
    fn too_many_columns_rejected() {
        let mut rng = stream(7, 0, Role::Signature);
        assert!(sample_haar_columns(3, 4, &mut rng).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(1, 5, Role::Noise).random();
        let b: u64 = stream(1, 5, Role::Noise).random();
        let c: u64 = stream(1, 5, Role::Training).random();
        let d: u64 = stream(1, 6, Role::Noise).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
