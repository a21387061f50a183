//! Receiver synchronization for shaped PSK.
//!
//! The phase factors turn an M-PSK stream into one occupying the
//! `M_eff = 2^{max(log2 M, I_p)}` angle set, so both the M-th power frequency
//! estimator and the decision-directed PLL run at `M_eff`, not at the base
//! order. The unshaped antipodal header anchors timing and absolute phase.

mod detect;
mod freq;
mod pll;
mod receiver;

pub use detect::frame_detect;
pub use freq::{estimate_freq_offset, freq_offset_spectrum, FreqEstimate, MIN_FREQ_SAMPLES};
pub use pll::{carrier_sync_pll, residual_phase_error, PllOutput};
pub use receiver::{receive_frame, Reception, RxStats};

use crate::error::{Error, Result};
use crate::modem::ModScheme;

pub const DEFAULT_LOOP_BANDWIDTH: f64 = 0.01;
pub const DEFAULT_DETECT_THRESHOLD: f64 = 0.7;
pub const DEFAULT_CFO_LOCK_RATIO: f64 = 25.0;

/// Smallest PSK angle set containing every rotation of `scheme` by a
/// multiple of `2π / 2^{I_p}`.
pub fn effective_order(scheme: ModScheme, phase_intensity: u32) -> Result<usize> {
    if !scheme.is_psk() {
        return Err(Error::NotPsk(scheme));
    }
    let base = scheme.bits_per_symbol() as u32;
    Ok(1usize << base.max(phase_intensity))
}

/// Where the receiver's carrier loop runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tracking {
    /// On the shaped stream with an `M_eff`-fold detector.
    EffectiveOrder,
    /// On the stream with the known phase factors removed, with a detector
    /// at the base PSK order.
    #[default]
    KeyAided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncConfig {
    pub effective_order: usize,
    /// Normalized loop noise bandwidth (per symbol).
    pub pll_loop_bandwidth: f64,
    /// Normalized correlation needed to declare a frame.
    pub detect_threshold: f64,
    /// Largest frame start searched; `None` searches the whole block.
    pub search_window: Option<usize>,
    /// Apply the M-th power frequency estimate in the receiver.
    pub correct_cfo: bool,
    /// Minimum spectral peak-to-mean ratio for the frequency estimate to be
    /// trusted; below it the receiver assumes zero offset.
    pub cfo_lock_ratio: f64,
    pub tracking: Tracking,
}

impl SyncConfig {
    pub fn new(effective_order: usize) -> Result<Self> {
        let cfg = SyncConfig {
            effective_order,
            pll_loop_bandwidth: DEFAULT_LOOP_BANDWIDTH,
            detect_threshold: DEFAULT_DETECT_THRESHOLD,
            search_window: None,
            correct_cfo: true,
            cfo_lock_ratio: DEFAULT_CFO_LOCK_RATIO,
            tracking: Tracking::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration matched to a shaped link.
    pub fn for_link(scheme: ModScheme, phase_intensity: u32) -> Result<Self> {
        Self::new(effective_order(scheme, phase_intensity)?)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.effective_order;
        if !(m.is_power_of_two() && (2..=64).contains(&m)) {
            return Err(Error::Domain(format!(
                "effective order must be a power of two in [2, 64], got {m}"
            )));
        }
        if !(self.pll_loop_bandwidth > 0.0 && self.pll_loop_bandwidth < 0.5) {
            return Err(Error::Domain(format!(
                "loop bandwidth must lie in (0, 0.5), got {}",
                self.pll_loop_bandwidth
            )));
        }
        if !(self.detect_threshold > 0.0 && self.detect_threshold < 1.0) {
            return Err(Error::Domain(format!(
                "detection threshold must lie in (0, 1), got {}",
                self.detect_threshold
            )));
        }
        if !(self.cfo_lock_ratio >= 0.0) {
            return Err(Error::Domain("cfo lock ratio must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    pub frame_start: usize,
    /// Cycles per symbol.
    pub cfo_estimate: f64,
    /// Radians.
    pub phase_estimate: f64,
    /// Normalized correlation magnitude in `[0, 1]`.
    pub correlation_peak: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Counts the distinct angles of all rotated copies of the base set.
    fn brute_force_angle_count(order: usize, ip: u32) -> usize {
        let levels = 1usize << ip;
        // Work on a common grid of 2^12 steps per turn.
        let grid = 1usize << 12;
        let mut set = BTreeSet::new();
        for k in 0..order {
            for d in 0..levels {
                set.insert((k * grid / order + d * grid / levels) % grid);
            }
        }
        set.len()
    }

    #[test]
    fn effective_order_examples() {
        assert_eq!(effective_order(ModScheme::Qpsk, 1).unwrap(), 4);
        assert_eq!(effective_order(ModScheme::Qpsk, 3).unwrap(), 8);
        assert_eq!(effective_order(ModScheme::Qpsk, 4).unwrap(), 16);
        assert!(matches!(
            effective_order(ModScheme::Qam16, 2),
            Err(Error::NotPsk(ModScheme::Qam16))
        ));
    }

    #[test]
    fn effective_order_matches_enumeration() {
        for scheme in ModScheme::ALL.into_iter().filter(|m| m.is_psk()) {
            for ip in 0..=6 {
                assert_eq!(
                    effective_order(scheme, ip).unwrap(),
                    brute_force_angle_count(scheme.order(), ip),
                    "{scheme} ip={ip}"
                );
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(SyncConfig::new(16).is_ok());
        assert!(SyncConfig::new(12).is_err());
        assert!(SyncConfig::new(128).is_err());
        assert!(SyncConfig::for_link(ModScheme::Qpsk, 7).is_err());
        let mut c = SyncConfig::new(4).unwrap();
        c.detect_threshold = 1.0;
        assert!(c.validate().is_err());
    }
}
