use num_complex::Complex64;
use rustfft::FftPlanner;

use super::SyncConfig;
use crate::error::{Error, Result};
use crate::modem::IqSample;

pub const MIN_FREQ_SAMPLES: usize = 512;

/// Zero-padding factor of the search spectrum (at least).
const OVERSAMPLE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqEstimate {
    /// Cycles per symbol.
    pub cfo: f64,
    /// Peak power over mean power of the M-th power spectrum.
    pub peak_to_mean: f64,
}

/// M-th power carrier frequency offset estimate, in cycles per symbol.
///
/// Offsets beyond `±1/(2·M_eff)` alias and cannot be detected.
pub fn estimate_freq_offset(samples: &[IqSample], cfg: &SyncConfig) -> Result<f64> {
    freq_offset_spectrum(samples, cfg.effective_order).map(|e| e.cfo)
}

pub fn freq_offset_spectrum(samples: &[IqSample], order: usize) -> Result<FreqEstimate> {
    if samples.len() < MIN_FREQ_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FREQ_SAMPLES,
            got: samples.len(),
        });
    }
    let nfft = (samples.len() * OVERSAMPLE).next_power_of_two();
    let mut buf: Vec<Complex64> = Vec::with_capacity(nfft);
    buf.extend(samples.iter().map(|s| s.powu(order as u32)));
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let (peak, peak_power) = power
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, p)| if p > best.1 { (i, p) } else { best });
    let mean = power.iter().sum::<f64>() / nfft as f64;

    // Parabolic refinement on magnitudes around the peak bin.
    let mag = |i: usize| power[i % nfft].sqrt();
    let (l, c, r) = (mag(peak + nfft - 1), mag(peak), mag(peak + 1));
    let denom = l - 2.0 * c + r;
    let delta = if denom.abs() > f64::EPSILON { 0.5 * (l - r) / denom } else { 0.0 };

    let mut f = (peak as f64 + delta) / nfft as f64;
    if f >= 0.5 {
        f -= 1.0;
    }
    Ok(FreqEstimate {
        cfo: f / order as f64,
        peak_to_mean: if mean > 0.0 { peak_power / mean } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, ChannelConfig};
    use crate::modem::{modulate, ModConfig, ModScheme};
    use crate::shaping::{apply_shaping, FactorStream, ShapingConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn shaped_qpsk(n: usize, ip: u32, im: f64, seed: u64) -> Vec<IqSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mc = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let tx = modulate(&idx, &mc).unwrap();
        let sc = ShapingConfig::new(seed, ip, im).unwrap();
        apply_shaping(&tx, &FactorStream::generate(&sc, n)).unwrap()
    }

    #[test]
    fn zero_offset_estimates_zero() {
        let x = shaped_qpsk(4096, 2, 0.5, 1);
        let cfg = SyncConfig::new(4).unwrap();
        assert!(estimate_freq_offset(&x, &cfg).unwrap().abs() < 1e-5);
    }

    #[test]
    fn clean_offset_is_recovered() {
        let x = shaped_qpsk(4096, 0, 1.0, 2);
        let ch = ChannelConfig {
            cfo: 1e-3,
            phase_offset: 0.4,
            ..ChannelConfig::default()
        };
        let y = apply_channel(&x, &ch).unwrap();
        let est = estimate_freq_offset(&y, &SyncConfig::new(4).unwrap()).unwrap();
        assert!((est - 1e-3).abs() < 5e-5, "{est}");
    }

    #[test]
    fn shaped_sixteen_fold_offset() {
        let x = shaped_qpsk(4096, 4, 0.6, 3);
        let ch = ChannelConfig {
            cfo: -7e-3,
            ..ChannelConfig::default()
        };
        let y = apply_channel(&x, &ch).unwrap();
        let est = estimate_freq_offset(&y, &SyncConfig::new(16).unwrap()).unwrap();
        assert!((est + 7e-3).abs() < 5e-5, "{est}");
    }

    #[test]
    fn too_few_samples() {
        let x = shaped_qpsk(511, 0, 1.0, 4);
        assert!(matches!(
            estimate_freq_offset(&x, &SyncConfig::new(4).unwrap()),
            Err(Error::TooFewSamples { needed: 512, got: 511 })
        ));
    }

    #[test]
    fn power_operation_collapses_shaped_symbols_to_one_ray() {
        let x = shaped_qpsk(4096, 4, 0.2, 5);
        let rays: Vec<f64> = x.iter().map(|s| s.powu(16).arg()).collect();
        let spread = rays
            .iter()
            .map(|a| (a - rays[0] + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
                - std::f64::consts::PI)
            .fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(spread < 1e-6, "{spread}");
    }

    #[test]
    fn noise_alone_stays_below_the_lock_ratio() {
        let mut worst = 0.0f64;
        for seed in 0..2000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<IqSample> = (0..1024)
                .map(|_| IqSample::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            for order in [4, 16] {
                worst = worst.max(freq_offset_spectrum(&x, order).unwrap().peak_to_mean);
            }
        }
        assert!(worst < crate::sync::DEFAULT_CFO_LOCK_RATIO, "{worst}");
    }
}
