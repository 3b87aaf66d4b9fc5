//! Large-system SINR analysis of linear multiuser receivers.
//!
//! This crate computes the asymptotic (large-dimension) output SINR of two
//! families of linear receivers operating on the generic transmission model
//! `y = H S A b + n`:
//!
//! - the full-CSI **MMSE** receiver ([`mmse`]), and
//! - the **adaptive least-squares** (ALS / windowed RLS) receiver trained with
//!   `eta * N` symbols, either from a known training sequence or semi-blind,
//!   with optional diagonal loading and data windowing ([`als`]).
//!
//! Both are obtained by solving deterministic fixed-point equations that involve
//! only the limiting eigenvalue distributions of `A^2` (stream powers), `H H^†`
//! (channel) and the window `W`, all encoded as [`distributions::ScalarDistribution`]s.
//!
//! Supporting modules provide the root finders ([`rootfind`]), the closed-form
//! MMSE/ALS relationship and capacity gap ([`relation`]) and throughput
//! optimisation over the training length ([`throughput`]).
//!
//! # Example
//!
//! ```
//! use sinr_core::distributions::ScalarDistribution;
//! use sinr_core::mmse::{mmse_sinr, MmseParams, SignatureKind};
//!
//! let params = MmseParams {
//!     alpha: 0.5,
//!     beta: 1.0,
//!     sigma2: 0.1,
//!     power: ScalarDistribution::point_mass(1.0),
//!     channel: ScalarDistribution::point_mass(1.0),
//!     signature: SignatureKind::Iid,
//! };
//! let sinr = mmse_sinr(&params, 1.0).unwrap();
//! assert!((sinr - 5.742).abs() < 1e-3);
//! ```

pub mod als;
pub mod distributions;
pub mod error;
pub mod mmse;
pub mod quadrature;
pub mod relation;
pub mod rootfind;
pub mod throughput;

pub use error::{Error, Result};

/// Version of this crate, recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex double-precision scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Converts a linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts decibels to a linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
