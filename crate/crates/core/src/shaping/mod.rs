//! Ring shaping: shared phase/magnitude factor streams and the shaping
//! transform.
//!
//! Symbol `k` is multiplied by `M_k · e^{jθ_k}` where `θ_k = 2π·d_k / 2^{I_p}`
//! for `I_p` uniform random bits `d_k`, and `M_k ~ Uniform[I_m, 1]`. Since
//! `M_k ≤ 1` the shaped magnitude never exceeds the original, and never drops
//! below `I_m` times it.

mod theory;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::IqSample;
use crate::rng::{counter_stream, unit_f64, StreamId};
use rand::RngCore;

pub use theory::{mpsk_ber, q_function, ring_mean_amplitude, ring_power, theoretical_ber_ring, BerMode};

pub const MAX_PHASE_INTENSITY: u32 = 16;

/// Magnitude factors below this cannot be inverted.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

/// The shared secret between transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingConfig {
    pub seed: u64,
    /// `I_p`: the rotation grid has `2^I_p` levels.
    pub phase_intensity: u32,
    /// `I_m`: lower bound of the magnitude factor, in `(0, 1]`.
    pub magnitude_intensity: f64,
}

impl ShapingConfig {
    pub fn new(seed: u64, phase_intensity: u32, magnitude_intensity: f64) -> Result<Self> {
        if phase_intensity > MAX_PHASE_INTENSITY {
            return Err(Error::Domain(format!(
                "phase intensity {phase_intensity} exceeds {MAX_PHASE_INTENSITY}"
            )));
        }
        if !(magnitude_intensity > 0.0 && magnitude_intensity <= 1.0) {
            return Err(Error::Domain(format!(
                "magnitude intensity must lie in (0, 1], got {magnitude_intensity}"
            )));
        }
        Ok(ShapingConfig {
            seed,
            phase_intensity,
            magnitude_intensity,
        })
    }

    /// No rotation and no magnitude change.
    pub fn identity(seed: u64) -> Self {
        ShapingConfig {
            seed,
            phase_intensity: 0,
            magnitude_intensity: 1.0,
        }
    }

    pub fn phase_levels(&self) -> u64 {
        1u64 << self.phase_intensity
    }
}

/// Per-symbol phase and magnitude factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorStream {
    thetas: Vec<f64>,
    magnitudes: Vec<f64>,
}

impl FactorStream {
    pub fn new(thetas: Vec<f64>, magnitudes: Vec<f64>) -> Result<Self> {
        if thetas.len() != magnitudes.len() {
            return Err(Error::LengthMismatch {
                expected: thetas.len(),
                actual: magnitudes.len(),
            });
        }
        Ok(FactorStream { thetas, magnitudes })
    }

    /// Factors for symbols `0..count`.
    pub fn generate(cfg: &ShapingConfig, count: usize) -> Self {
        Self::generate_range(cfg, 0, count)
    }

    /// Factors for symbols `start..start + count`; identical to the matching
    /// slice of a stream generated from zero.
    pub fn generate_range(cfg: &ShapingConfig, start: u64, count: usize) -> Self {
        FactorStream {
            thetas: phase_factors_from(cfg, start, count),
            magnitudes: magnitude_factors_from(cfg, start, count),
        }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// Phase factors `θ_k = 2π·d_k / 2^{I_p}` for symbols `0..count`.
pub fn gen_phase_factors(cfg: &ShapingConfig, count: usize) -> Vec<f64> {
    phase_factors_from(cfg, 0, count)
}

/// Magnitude factors drawn uniformly on `[I_m, 1]` for symbols `0..count`.
pub fn gen_magnitude_factors(cfg: &ShapingConfig, count: usize) -> Vec<f64> {
    magnitude_factors_from(cfg, 0, count)
}

/// The random digit `d_k ∈ [0, 2^{I_p})` behind each phase factor.
pub fn phase_digits(cfg: &ShapingConfig, start: u64, count: usize) -> Vec<u64> {
    let bits = cfg.phase_intensity;
    if bits == 0 {
        return vec![0; count];
    }
    let mut rng = counter_stream(cfg.seed, StreamId::Phase, start);
    (0..count).map(|_| rng.next_u64() >> (64 - bits)).collect()
}

fn phase_factors_from(cfg: &ShapingConfig, start: u64, count: usize) -> Vec<f64> {
    let step = 2.0 * PI / cfg.phase_levels() as f64;
    phase_digits(cfg, start, count)
        .into_iter()
        .map(|d| step * d as f64)
        .collect()
}

fn magnitude_factors_from(cfg: &ShapingConfig, start: u64, count: usize) -> Vec<f64> {
    let low = cfg.magnitude_intensity;
    let span = 1.0 - low;
    let mut rng = counter_stream(cfg.seed, StreamId::Magnitude, start);
    (0..count)
        .map(|_| low + span * unit_f64(rng.next_u64()))
        .collect()
}

/// `out_k = s_k · M_k · e^{jθ_k}`.
pub fn apply_shaping(samples: &[IqSample], factors: &FactorStream) -> Result<Vec<IqSample>> {
    check_len(samples.len(), factors.len())?;
    Ok(samples
        .iter()
        .zip(factors.thetas.iter().zip(&factors.magnitudes))
        .map(|(s, (&theta, &mag))| s * Complex64::from_polar(mag, theta))
        .collect())
}

/// `out_k = s_k · e^{-jθ_k} / M_k`.
pub fn invert_shaping(samples: &[IqSample], factors: &FactorStream) -> Result<Vec<IqSample>> {
    check_len(samples.len(), factors.len())?;
    if let Some((index, &value)) = factors
        .magnitudes
        .iter()
        .enumerate()
        .find(|(_, &m)| !(m >= MAGNITUDE_FLOOR))
    {
        return Err(Error::DegenerateFactor { index, value });
    }
    Ok(samples
        .iter()
        .zip(factors.thetas.iter().zip(&factors.magnitudes))
        .map(|(s, (&theta, &mag))| s * Complex64::from_polar(mag.recip(), -theta))
        .collect())
}

fn check_len(samples: usize, factors: usize) -> Result<()> {
    if samples != factors {
        return Err(Error::LengthMismatch {
            expected: factors,
            actual: samples,
        });
    }
    Ok(())
}
