//! Ring-shaped noise signaling over a symbol-rate baseband link.
//!
//! Conventionally modulated PSK symbols are multiplied by a per-symbol
//! magnitude factor in `[I_m, 1]` and rotated by a multiple of
//! `2π / 2^I_p`. Both factor streams are derived from a shared seed, so the
//! intended receiver can strip them while an observer sees an annular,
//! noise-like constellation.
//!
//! Modules:
//!
//! - [`modem`]: PSK/QAM constellations, Gray bit mapping, nearest-point demodulation.
//! - [`shaping`]: factor generation, the shaping transform and its inverse, analytic power/BER.
//! - [`framing`]: order-invariant header plus shaped data frames.
//! - [`channel`]: AWGN, carrier frequency offset and static phase offset.
//! - [`sync`]: M-th power frequency estimation, decision-directed PLL, header detection, full receiver.
//! - [`classifier`]: feature-based eavesdropper and PMI sweeps.
//! - [`iqfile`]: raw interleaved float32 I/Q files and their metadata sidecars.

pub mod channel;
pub mod classifier;
pub mod error;
pub mod framing;
pub mod iqfile;
pub mod modem;
pub mod rng;
pub mod shaping;
pub mod sync;

pub use error::{Error, Result};
pub use modem::{IqSample, ModConfig, ModScheme};
pub use shaping::{FactorStream, ShapingConfig};
