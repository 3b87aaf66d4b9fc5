//! Finite-system Monte Carlo for linear receivers over random matrix
//! channels.
//!
//! Each trial draws a channel `H`, signatures `S`, stream amplitudes `A`, a
//! block of training symbols and receiver noise, then evaluates the exact
//! output SINR of the MMSE and adaptive least-squares filters given those
//! realisations. SINRs are computed as quadratic forms of the realised filter
//! against the true received covariance, so no symbol-level averaging is
//! involved.
//!
//! Trials are independent and reproducible: every random object is drawn
//! from its own ChaCha stream keyed by `(seed, trial, role)`. Trials run in
//! parallel and are reduced in trial order.
//!
//! ```
//! use sinr_sim::{run_trials, ChannelPreset, Receiver, TrialConfig};
//!
//! let mut config = TrialConfig::new(ChannelPreset::RichMimo, 16, 0.5);
//! config.trials = 4;
//! config.receiver = Receiver::Mmse;
//! let report = run_trials(&config).unwrap();
//! assert_eq!(report.records.len(), 4 * 8);
//! assert!((report.mean_sinr_db - report.asymptotic_sinr_db).abs() < 1.5);
//! ```

mod error;
pub mod receivers;
pub mod sampling;
pub mod system;
pub mod trials;

/// Version of this crate, recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{SimError, SimResult};
pub use receivers::{
    als_filter_empirical, empirical_stieltjes, mmse_filter_empirical, output_sinr, received_covariance,
    sample_covariance,
};
pub use sampling::{sample_haar_columns, sample_iid_matrix, EntryLaw};
pub use system::{build_system, ChannelPreset, FiniteSystem, Modulation, Receiver, TrialConfig};
pub use trials::{run_trials, SinrRecord, SinrReport};

/// Complex scalar type shared with the analysis crate.
pub use sinr_core::C64;
