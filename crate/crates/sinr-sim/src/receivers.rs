//! Realised MMSE and ALS filters and their exact output SINR.

use crate::system::FiniteSystem;
use crate::{SimError, SimResult, C64};
use nalgebra::{DMatrix, DVector};
use sinr_core::als::ReceiverMode;

/// True received covariance `(HSA)(HSA)^† + sigma^2 I`.
pub fn received_covariance(sys: &FiniteSystem) -> DMatrix<C64> {
    let hsa = sys.weighted_signatures();
    let m = sys.m();
    &hsa * hsa.adjoint() + DMatrix::<C64>::identity(m, m) * C64::new(sys.sigma2, 0.0)
}

/// Windowed sample covariance `(1/i) Y W Y^† + loading I`, where `loading`
/// is `mu / eta` when `loaded` is set and zero otherwise.
pub fn sample_covariance(sys: &FiniteSystem, loaded: bool) -> DMatrix<C64> {
    let i = sys.i() as f64;
    let mut weighted = sys.received.clone();
    for (m, &w) in sys.weights.iter().enumerate() {
        let mut column = weighted.column_mut(m);
        column *= C64::new(w / i, 0.0);
    }
    let mut cov = &weighted * sys.received.adjoint();
    if loaded {
        let loading = sys.mu / sys.eta();
        for d in 0..cov.nrows() {
            cov[(d, d)] += loading;
        }
    }
    cov
}

/// Output SINR of `filter` for stream `k` against the true covariance:
/// `P_k |c^† h_k|^2 / (c^† R c - P_k |c^† h_k|^2)` with `h_k = H s_k`.
pub fn output_sinr(sys: &FiniteSystem, covariance: &DMatrix<C64>, filter: &DVector<C64>, k: usize) -> f64 {
    let hk = &sys.h * sys.s.column(k);
    let power = sys.amplitudes[k] * sys.amplitudes[k];
    let gain = filter.dotc(&hk).norm_sqr();
    let total = filter.dotc(&(covariance * filter)).re;
    let signal = power * gain;
    let distortion = total - signal;
    if signal == 0.0 {
        0.0
    } else {
        signal / distortion
    }
}

/// Smallest accepted ratio of squared Cholesky pivots; a rank-deficient
/// positive semi-definite matrix can factor in floating point with pivots at
/// the rounding level.
const PIVOT_RATIO: f64 = 1e-12;

fn cholesky_solve(matrix: DMatrix<C64>, rhs: &DMatrix<C64>, what: &str) -> SimResult<DMatrix<C64>> {
    let singular = || SimError::Singular(what.to_string());
    let factor = matrix.cholesky().ok_or_else(singular)?;
    let pivots: Vec<f64> = factor.l_dirty().diagonal().iter().map(|d| d.norm_sqr()).collect();
    let largest = pivots.iter().copied().fold(0.0, f64::max);
    let smallest = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest.is_nan() || smallest <= PIVOT_RATIO * largest {
        return Err(singular());
    }
    Ok(factor.solve(rhs))
}

/// Per-stream SINR of the MMSE filters `c_k = R^{-1} H s_k`.
pub fn mmse_filter_empirical(sys: &FiniteSystem) -> SimResult<Vec<f64>> {
    let covariance = received_covariance(sys);
    let filters = cholesky_solve(covariance.clone(), &sys.effective_signatures(), "received covariance")?;
    Ok((0..sys.k())
        .map(|k| output_sinr(sys, &covariance, &filters.column(k).into_owned(), k))
        .collect())
}

/// Per-stream SINR of the ALS filters `c_k = R_hat^{-1} s_hat_k`, with
/// `s_hat_k = (1/i) Y W b_k^†` (training) or `H s_k` (semi-blind).
pub fn als_filter_empirical(sys: &FiniteSystem) -> SimResult<Vec<f64>> {
    let estimate = sample_covariance(sys, true);
    let cross = match sys.mode {
        ReceiverMode::SemiBlind => sys.effective_signatures(),
        ReceiverMode::Training => {
            let i = sys.i() as f64;
            let mut weighted = sys.received.clone();
            for (m, &w) in sys.weights.iter().enumerate() {
                let mut column = weighted.column_mut(m);
                column *= C64::new(w / i, 0.0);
            }
            weighted * sys.training.adjoint()
        }
    };
    let filters = cholesky_solve(
        estimate,
        &cross,
        "sample covariance (add diagonal loading mu > 0 or lengthen the training block)",
    )?;
    let covariance = received_covariance(sys);
    Ok((0..sys.k())
        .map(|k| output_sinr(sys, &covariance, &filters.column(k).into_owned(), k))
        .collect())
}

/// Empirical Stieltjes transform `(1/M) sum_j 1/(lambda_j - z)` of a
/// Hermitian matrix.
pub fn empirical_stieltjes(matrix: &DMatrix<C64>, point: C64) -> C64 {
    let eigenvalues = matrix.clone().symmetric_eigenvalues();
    let m = eigenvalues.len() as f64;
    eigenvalues.iter().map(|&lambda| (C64::new(lambda, 0.0) - point).inv()).sum::<C64>() / m
}
