//! Symbol-rate channel: AWGN, carrier frequency offset and a static phase
//! offset.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::modem::IqSample;

/// What `Es` the noise level is referenced to.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseReference {
    /// Mean power of the block entering the channel.
    #[default]
    Measured,
    /// A fixed symbol energy, e.g. the unshaped constellation energy `A²`.
    Nominal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// `Es/N0` in dB; `+∞` disables noise.
    pub es_n0_db: f64,
    /// Carrier frequency offset in cycles per symbol.
    pub cfo: f64,
    /// Static phase offset in radians.
    pub phase_offset: f64,
    pub noise_seed: u64,
    pub noise_reference: NoiseReference,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            es_n0_db: f64::INFINITY,
            cfo: 0.0,
            phase_offset: 0.0,
            noise_seed: 0,
            noise_reference: NoiseReference::Measured,
        }
    }
}

impl ChannelConfig {
    pub fn awgn(es_n0_db: f64, noise_seed: u64) -> Self {
        ChannelConfig {
            es_n0_db,
            noise_seed,
            ..ChannelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfo.abs() < 0.5) {
            return Err(Error::Domain(format!(
                "|cfo| must be below 0.5 cycles/symbol, got {}",
                self.cfo
            )));
        }
        if self.es_n0_db.is_nan() || self.es_n0_db == f64::NEG_INFINITY {
            return Err(Error::Domain(format!("invalid Es/N0 {} dB", self.es_n0_db)));
        }
        if !self.phase_offset.is_finite() {
            return Err(Error::Domain("phase offset must be finite".into()));
        }
        if let NoiseReference::Nominal(es) = self.noise_reference {
            if !(es.is_finite() && es > 0.0) {
                return Err(Error::Domain(format!("nominal Es must be > 0, got {es}")));
            }
        }
        Ok(())
    }
}

pub fn mean_power(samples: &[IqSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Adds circularly symmetric Gaussian noise with per-sample variance
/// `N0 = Es / (Es/N0)`.
pub fn apply_awgn(samples: &[IqSample], cfg: &ChannelConfig) -> Result<Vec<IqSample>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if cfg.es_n0_db == f64::INFINITY {
        return Ok(samples.to_vec());
    }
    let es = match cfg.noise_reference {
        NoiseReference::Measured => mean_power(samples),
        NoiseReference::Nominal(es) => es,
    };
    let n0 = es / db_to_linear(cfg.es_n0_db);
    let sigma = (n0 / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
    Ok(samples
        .iter()
        .map(|s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(re, im) * sigma
        })
        .collect())
}

/// Multiplies sample `k` by `e^{j(2π·cfo·k + phase_offset)}`.
pub fn apply_cfo(samples: &[IqSample], cfg: &ChannelConfig) -> Result<Vec<IqSample>> {
    cfg.validate()?;
    Ok(rotate(samples, cfg.cfo, cfg.phase_offset))
}

/// Frequency/phase offset followed by noise.
pub fn apply_channel(samples: &[IqSample], cfg: &ChannelConfig) -> Result<Vec<IqSample>> {
    apply_awgn(&apply_cfo(samples, cfg)?, cfg)
}

/// Multiplies sample `k` by `e^{j(2π·cycles_per_symbol·k + phase)}`.
pub fn rotate(samples: &[IqSample], cycles_per_symbol: f64, phase: f64) -> Vec<IqSample> {
    if cycles_per_symbol == 0.0 && phase == 0.0 {
        return samples.to_vec();
    }
    samples
        .iter()
        .enumerate()
        .map(|(k, s)| s * Complex64::from_polar(1.0, 2.0 * PI * cycles_per_symbol * k as f64 + phase))
        .collect()
}
