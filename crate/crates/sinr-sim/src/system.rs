//! Trial configuration, channel presets and finite-system construction.

use crate::sampling::{complex_gaussian, qpsk, sample_haar_columns, sample_iid_matrix, stream, EntryLaw, Role};
use crate::{SimError, SimResult, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sinr_core::als::{AlsParams, ReceiverMode, TrainingKind};
use sinr_core::distributions::{ScalarDistribution, WindowSpec};
use sinr_core::mmse::{MmseParams, SignatureKind};

/// Example channel families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelPreset {
    /// Rich-scattering MIMO: `H = I`, i.i.d. `S` (antenna-domain model).
    RichMimo,
    /// CDMA in flat-per-chip Rayleigh fading: diagonal `H` with unit-mean
    /// exponential `|h|^2`.
    CdmaRayleigh,
    /// Single-input FIR channel with a cyclic prefix: circulant `H` built
    /// from `taps`, `S = A = I`.
    FirCyclic {
        /// Impulse response.
        taps: Vec<C64>,
    },
}

impl ChannelPreset {
    /// The classic three-tap-symmetric five-tap test channel
    /// `[0.227, 0.46, 0.688, 0.46, 0.227]`.
    pub fn proakis_c() -> Self {
        Self::FirCyclic {
            taps: [0.227, 0.46, 0.688, 0.46, 0.227]
                .iter()
                .map(|&t| C64::new(t, 0.0))
                .collect(),
        }
    }
}

/// Symbol alphabet of i.i.d. signatures and training symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// Unit-energy QPSK.
    Qpsk,
    /// Circularly symmetric complex Gaussian.
    Gaussian,
}

/// Receiver under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    /// MMSE filter with full channel knowledge.
    Mmse,
    /// Adaptive least-squares filter estimated from the training block.
    Als,
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    /// Channel family.
    pub preset: ChannelPreset,
    /// Transmit dimension `N`.
    pub n: usize,
    /// Streams per transmit dimension (`K = round(alpha N)`).
    pub alpha: f64,
    /// Receive dimensions per transmit dimension (all presets are square).
    pub beta: f64,
    /// Training intervals per transmit dimension (`i = round(eta N)`).
    pub eta: f64,
    /// Noise variance.
    pub sigma2: f64,
    /// Diagonal loading constant.
    pub mu: f64,
    /// Data window.
    pub window: WindowSpec,
    /// Signature statistics.
    pub signature: SignatureKind,
    /// Training statistics.
    pub training: TrainingKind,
    /// ALS filter construction.
    pub mode: ReceiverMode,
    /// Receiver under test.
    pub receiver: Receiver,
    /// Stream power law (assigned to streams by quantiles).
    pub power: ScalarDistribution,
    /// Number of independent trials.
    pub trials: u64,
    /// Base seed.
    pub seed: u64,
    /// Alphabet of signatures and training symbols.
    pub modulation: Modulation,
}

impl TrialConfig {
    /// Defaults: `beta = 1`, `eta = 4`, `sigma2 = 0.1`, `mu = 0.1`,
    /// rectangular window, i.i.d. signatures and training, training-based
    /// ALS receiver, unit powers, 100 QPSK trials with seed 0. The FIR
    /// preset forces `alpha = 1` and isometric (identity) signatures.
    pub fn new(preset: ChannelPreset, n: usize, alpha: f64) -> Self {
        let fir = matches!(preset, ChannelPreset::FirCyclic { .. });
        Self {
            preset,
            n,
            alpha: if fir { 1.0 } else { alpha },
            beta: 1.0,
            eta: 4.0,
            sigma2: 0.1,
            mu: 0.1,
            window: WindowSpec::Rectangular,
            signature: if fir { SignatureKind::Isometric } else { SignatureKind::Iid },
            training: TrainingKind::Iid,
            mode: ReceiverMode::Training,
            receiver: Receiver::Als,
            power: ScalarDistribution::point_mass(1.0),
            trials: 100,
            seed: 0,
            modulation: Modulation::Qpsk,
        }
    }

    /// `(N, M, K, i)`.
    pub fn dimensions(&self) -> (usize, usize, usize, usize) {
        let n = self.n;
        let m = (self.beta * n as f64).round() as usize;
        let k = (self.alpha * n as f64).round() as usize;
        let i = (self.eta * n as f64).round() as usize;
        (n, m, k, i)
    }

    /// Checks the configuration against the preset's structure.
    pub fn validate(&self) -> SimResult<()> {
        let (n, m, k, i) = self.dimensions();
        if n == 0 || k == 0 {
            return Err(SimError::Config("need N >= 1 and K >= 1".into()));
        }
        if self.receiver == Receiver::Als && i == 0 {
            return Err(SimError::Config("need at least one training interval".into()));
        }
        if m != n {
            return Err(SimError::Config(format!(
                "all presets have a square channel; got beta = {}",
                self.beta
            )));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(SimError::Config(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(SimError::Config(format!("mu = {} must be non-negative", self.mu)));
        }
        if self.signature == SignatureKind::Isometric && k > n {
            return Err(SimError::Config(format!("isometric signatures need K = {k} <= N = {n}")));
        }
        if let ChannelPreset::FirCyclic { taps } = &self.preset {
            if k != n || self.signature != SignatureKind::Isometric {
                return Err(SimError::Config(
                    "the FIR preset transmits one stream per dimension (alpha = 1, isometric S = I)".into(),
                ));
            }
            if taps.is_empty() || taps.len() > n {
                return Err(SimError::Config(format!(
                    "need between 1 and N = {n} taps, got {}",
                    taps.len()
                )));
            }
        }
        self.power.validate().map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }

    /// Limiting law of the non-zero eigenvalues of `H H^†` for the preset.
    pub fn channel_law(&self) -> SimResult<ScalarDistribution> {
        match &self.preset {
            ChannelPreset::RichMimo => Ok(ScalarDistribution::point_mass(1.0)),
            ChannelPreset::CdmaRayleigh => ScalarDistribution::exponential(1.0),
            ChannelPreset::FirCyclic { taps } => ScalarDistribution::empirical(fir_spectrum(taps, self.n)),
        }
        .map_err(|e| SimError::Config(e.to_string()))
    }

    /// Large-system MMSE description of the configuration.
    pub fn mmse_params(&self) -> SimResult<MmseParams> {
        Ok(MmseParams {
            alpha: self.alpha,
            beta: self.beta,
            sigma2: self.sigma2,
            power: self.power.clone(),
            channel: self.channel_law()?,
            signature: self.signature,
        })
    }

    /// Large-system ALS description of the configuration.
    pub fn als_params(&self) -> SimResult<AlsParams> {
        Ok(AlsParams {
            alpha: self.alpha,
            beta: self.beta,
            eta: self.eta,
            sigma2: self.sigma2,
            mu: self.mu,
            power: self.power.clone(),
            channel: self.channel_law()?,
            window: self.window.clone(),
            signature: self.signature,
            training: self.training,
            mode: self.mode,
        })
    }
}

/// `|DFT_N(taps)|^2`, the eigenvalues of the circulant `H H^†`.
pub fn fir_spectrum(taps: &[C64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|bin| {
            taps.iter()
                .enumerate()
                .map(|(l, &t)| t * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (bin * l) as f64 / n as f64))
                .sum::<C64>()
                .norm_sqr()
        })
        .collect()
}

/// `n × n` circulant matrix whose first column is `taps` padded with zeros.
pub fn circulant(taps: &[C64], n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |row, col| {
        let lag = (row + n - col) % n;
        taps.get(lag).copied().unwrap_or(C64::new(0.0, 0.0))
    })
}

/// Realised system for one trial.
#[derive(Debug, Clone)]
pub struct FiniteSystem {
    /// Channel, `M × N`.
    pub h: DMatrix<C64>,
    /// Signatures, `N × K`.
    pub s: DMatrix<C64>,
    /// Stream amplitudes `sqrt(P_k)`.
    pub amplitudes: Vec<f64>,
    /// Noise variance.
    pub sigma2: f64,
    /// Window weights `w_1, ..., w_i`.
    pub weights: Vec<f64>,
    /// Diagonal loading constant.
    pub mu: f64,
    /// Training symbols, `K × i` (row `k` is stream `k`'s sequence).
    pub training: DMatrix<C64>,
    /// Received training block `H S A B + noise`, `M × i`.
    pub received: DMatrix<C64>,
    /// Training statistics.
    pub training_kind: TrainingKind,
    /// ALS filter construction.
    pub mode: ReceiverMode,
}

impl FiniteSystem {
    /// Transmit dimension `N`.
    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    /// Receive dimension `M`.
    pub fn m(&self) -> usize {
        self.h.nrows()
    }

    /// Number of streams `K`.
    pub fn k(&self) -> usize {
        self.s.ncols()
    }

    /// Number of training intervals `i`.
    pub fn i(&self) -> usize {
        self.weights.len()
    }

    /// Realised normalised training length `i / N`.
    pub fn eta(&self) -> f64 {
        self.i() as f64 / self.n() as f64
    }

    /// Effective signatures without amplitudes, `H S` (`M × K`).
    pub fn effective_signatures(&self) -> DMatrix<C64> {
        &self.h * &self.s
    }

    /// Effective signatures with amplitudes, `H S A` (`M × K`).
    pub fn weighted_signatures(&self) -> DMatrix<C64> {
        let mut hs = self.effective_signatures();
        for (k, &a) in self.amplitudes.iter().enumerate() {
            let mut column = hs.column_mut(k);
            column *= C64::new(a, 0.0);
        }
        hs
    }
}

/// Deterministic `count` draws following `dist` (quantiles for continuous
/// laws, largest-remainder allocation for atoms).
pub fn quantile_draws(dist: &ScalarDistribution, count: usize) -> Vec<f64> {
    match dist {
        ScalarDistribution::PointMasses { values, weights } => {
            let total: f64 = weights.iter().sum();
            let exact: Vec<f64> = weights.iter().map(|w| w / total * count as f64).collect();
            let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
            let assigned: usize = counts.iter().sum();
            for &j in order.iter().take(count - assigned) {
                counts[j] += 1;
            }
            values
                .iter()
                .zip(&counts)
                .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
                .collect()
        }
        ScalarDistribution::Exponential { mean } => (0..count)
            .map(|j| -mean * (1.0 - (j as f64 + 0.5) / count as f64).ln())
            .collect(),
        ScalarDistribution::Empirical { samples } => {
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            (0..count)
                .map(|j| sorted[((j as f64 + 0.5) / count as f64 * sorted.len() as f64) as usize])
                .collect()
        }
    }
}

/// Window weights for `i` training intervals with normalised length `eta`.
pub fn window_weights(window: &WindowSpec, i: usize, eta: f64) -> SimResult<Vec<f64>> {
    Ok(match window {
        WindowSpec::Rectangular => vec![1.0; i],
        WindowSpec::Exponential { lbar } => {
            if !(lbar.is_finite() && *lbar > 0.0) {
                return Err(SimError::Config(format!("window length lbar = {lbar} must be positive")));
            }
            // Forgetting factor giving an effective memory of lbar N symbols.
            let forgetting = 1.0 - eta / (lbar * i as f64);
            (1..=i).map(|m| forgetting.powi((i - m) as i32)).collect()
        }
        WindowSpec::Custom { distribution } => {
            distribution.validate().map_err(|e| SimError::Config(e.to_string()))?;
            quantile_draws(distribution, i)
        }
    })
}

/// Orthogonal training block (`K × i`): orthogonal stream sequences of
/// energy `i` when `K <= i`, otherwise orthogonal time samples of energy `K`.
fn orthogonal_training(k: usize, i: usize, rng: &mut impl rand::Rng) -> SimResult<DMatrix<C64>> {
    if k <= i {
        let u = sample_haar_columns(i, k, rng)?;
        Ok(u.transpose() * C64::new((i as f64).sqrt(), 0.0))
    } else {
        let v = sample_haar_columns(k, i, rng)?;
        Ok(v.map(|c| c.conj()) * C64::new((k as f64).sqrt(), 0.0))
    }
}

/// Draws the complete finite system for trial `trial`.
pub fn build_system(config: &TrialConfig, trial: u64) -> SimResult<FiniteSystem> {
    config.validate()?;
    let (n, m, k, i) = config.dimensions();
    let law = match config.modulation {
        Modulation::Qpsk => EntryLaw::QpskScaled,
        Modulation::Gaussian => EntryLaw::Gaussian,
    };

    let mut rng = stream(config.seed, trial, Role::Channel);
    let h = match &config.preset {
        ChannelPreset::RichMimo => DMatrix::identity(m, n),
        ChannelPreset::CdmaRayleigh => {
            DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| complex_gaussian(&mut rng, 1.0)))
        }
        ChannelPreset::FirCyclic { taps } => circulant(taps, n),
    };

    let mut rng = stream(config.seed, trial, Role::Signature);
    let s = match (&config.preset, config.signature) {
        (ChannelPreset::FirCyclic { .. }, _) => DMatrix::identity(n, k),
        (_, SignatureKind::Iid) => sample_iid_matrix(n, k, &mut rng, law),
        (_, SignatureKind::Isometric) => sample_haar_columns(n, k, &mut rng)?,
    };

    let amplitudes: Vec<f64> = quantile_draws(&config.power, k).iter().map(|p| p.sqrt()).collect();
    let weights = window_weights(&config.window, i, i as f64 / n as f64)?;

    let mut rng = stream(config.seed, trial, Role::Training);
    let training = match config.training {
        TrainingKind::Iid => DMatrix::from_fn(k, i, |_, _| match config.modulation {
            Modulation::Qpsk => qpsk(&mut rng),
            Modulation::Gaussian => complex_gaussian(&mut rng, 1.0),
        }),
        TrainingKind::Orthogonal => orthogonal_training(k, i, &mut rng)?,
    };

    let mut rng = stream(config.seed, trial, Role::Noise);
    let noise = DMatrix::from_fn(m, i, |_, _| complex_gaussian(&mut rng, config.sigma2));

    let mut system = FiniteSystem {
        h,
        s,
        amplitudes,
        sigma2: config.sigma2,
        weights,
        mu: config.mu,
        training,
        received: DMatrix::zeros(m, i),
        training_kind: config.training,
        mode: config.mode,
    };
    system.received = system.weighted_signatures() * &system.training + noise;
    Ok(system)
}
