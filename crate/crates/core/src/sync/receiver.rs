use num_complex::Complex64;

use super::{
    carrier_sync_pll, frame_detect, freq_offset_spectrum, SyncConfig, SyncResult, Tracking, MIN_FREQ_SAMPLES,
};
use crate::channel::rotate;
use crate::error::{Error, Result};
use crate::framing::{build_header, FrameSpec};
use crate::modem::{nearest_point, symbol_indices_to_bits, IqSample, ModConfig};
use crate::shaping::{invert_shaping, FactorStream, ShapingConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxStats {
    /// RMS error vector of the synchronized shaped data against the
    /// re-shaped decisions, relative to the base amplitude.
    pub evm_pre: f64,
    /// RMS error vector after stripping the factors, relative to the base
    /// amplitude.
    pub evm_post: f64,
    /// Whether the frequency estimate was applied.
    pub cfo_locked: bool,
    pub bit_errors: Option<usize>,
    pub bits_compared: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    /// Recovered payload bits, including padding.
    pub bits: Vec<u8>,
    pub sync: SyncResult,
    pub stats: RxStats,
}

/// Full receive chain: frequency estimate, derotation, header detection,
/// header phase correction, carrier tracking, header removal, factor
/// inversion, demodulation and bit unmapping.
///
/// When `reference_bits` is given, the leading bits are compared against it.
pub fn receive_frame(
    samples: &[IqSample],
    mod_cfg: &ModConfig,
    shaping: &ShapingConfig,
    spec: &FrameSpec,
    sync_cfg: &SyncConfig,
    reference_bits: Option<&[u8]>,
) -> Result<Reception> {
    sync_cfg.validate()?;
    let scheme = mod_cfg.scheme;
    if !scheme.is_psk() {
        return Err(Error::NotPsk(scheme));
    }

    let (cfo, cfo_locked) = if sync_cfg.correct_cfo && samples.len() >= MIN_FREQ_SAMPLES {
        let est = freq_offset_spectrum(samples, sync_cfg.effective_order)?;
        if est.peak_to_mean >= sync_cfg.cfo_lock_ratio {
            (est.cfo, true)
        } else {
            (0.0, false)
        }
    } else {
        (0.0, false)
    };
    let derotated = rotate(samples, -cfo, 0.0);

    let header = build_header(spec, mod_cfg.amplitude)?;
    let mut sync = frame_detect(
        &derotated,
        &header,
        sync_cfg.detect_threshold,
        sync_cfg.search_window,
    )?;
    sync.cfo_estimate = cfo;

    let frame_len = spec.frame_symbols(scheme);
    let start = sync.frame_start;
    let available = derotated.len() - start;
    if available < frame_len {
        return Err(Error::LengthMismatch {
            expected: frame_len,
            actual: available,
        });
    }
    let aligned = rotate(&derotated[start..start + frame_len], 0.0, -sync.phase_estimate);
    let h = spec.header_symbols;
    let factors = FactorStream::generate(shaping, frame_len - h);
    let (data, recovered) = match sync_cfg.tracking {
        Tracking::EffectiveOrder => {
            let tracked = carrier_sync_pll(&aligned, sync_cfg).samples;
            let data = tracked[h..].to_vec();
            let recovered = invert_shaping(&data, &factors)?;
            (data, recovered)
        }
        Tracking::KeyAided => {
            let mut stripped = aligned;
            for (s, &theta) in stripped[h..].iter_mut().zip(factors.thetas()) {
                *s *= Complex64::from_polar(1.0, -theta);
            }
            let base = SyncConfig {
                effective_order: scheme.order(),
                ..*sync_cfg
            };
            let tracked = carrier_sync_pll(&stripped, &base).samples;
            let mut data = Vec::with_capacity(factors.len());
            let mut recovered = Vec::with_capacity(factors.len());
            for (k, s) in tracked[h..].iter().enumerate() {
                data.push(s * Complex64::from_polar(1.0, factors.thetas()[k]));
                recovered.push(s / factors.magnitudes()[k]);
            }
            (data, recovered)
        }
    };
    let points = mod_cfg.constellation();
    let decisions: Vec<usize> = recovered.iter().map(|s| nearest_point(*s, &points)).collect();
    let bits = symbol_indices_to_bits(&decisions, scheme)?;

    let amp = mod_cfg.amplitude;
    let mut pre = 0.0;
    let mut post = 0.0;
    for (k, &d) in decisions.iter().enumerate() {
        let ideal = points[d];
        let reshaped = ideal
            * Complex64::from_polar(factors.magnitudes()[k], factors.thetas()[k]);
        pre += (data[k] - reshaped).norm_sqr();
        post += (recovered[k] - ideal).norm_sqr();
    }
    let n = decisions.len().max(1) as f64;

    let (bit_errors, bits_compared) = match reference_bits {
        Some(reference) => {
            let compared = reference.len().min(bits.len());
            let errors = reference[..compared]
                .iter()
                .zip(&bits)
                .filter(|(a, b)| (**a != 0) != (**b != 0))
                .count();
            (Some(errors), compared)
        }
        None => (None, 0),
    };

    Ok(Reception {
        bits,
        sync,
        stats: RxStats {
            evm_pre: (pre / n).sqrt() / amp,
            evm_post: (post / n).sqrt() / amp,
            cfo_locked,
            bit_errors,
            bits_compared,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, ChannelConfig, NoiseReference};
    use crate::framing::{build_frame, expand_message_to_bits};
    use crate::modem::ModScheme;
    use crate::shaping::q_function;

    fn loopback(
        scheme: ModScheme,
        sc: &ShapingConfig,
        ch: &ChannelConfig,
        rx_shaping: &ShapingConfig,
    ) -> Reception {
        let spec = FrameSpec::default();
        let mc = ModConfig::new(scheme, 1.0).unwrap();
        let bits = expand_message_to_bits(&spec.message, spec.data_bits).unwrap();
        let frame = build_frame(&bits, &spec, &mc, sc).unwrap();
        let rx = apply_channel(&frame.samples(), ch).unwrap();
        let sync = SyncConfig::for_link(scheme, sc.phase_intensity).unwrap();
        receive_frame(&rx, &mc, rx_shaping, &spec, &sync, Some(&frame.payload_bits)).unwrap()
    }

    #[test]
    fn noiseless_loopback_all_intensities() {
        for ip in 0..=4 {
            for im in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
                let sc = ShapingConfig::new(1000 + ip as u64, ip, im).unwrap();
                let r = loopback(ModScheme::Qpsk, &sc, &ChannelConfig::default(), &sc);
                assert_eq!(r.stats.bit_errors, Some(0), "ip={ip} im={im}");
                assert_eq!(r.sync.frame_start, 0);
                assert!(r.stats.evm_post < 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_loopback_with_offsets() {
        let sc = ShapingConfig::new(3, 3, 0.4).unwrap();
        let ch = ChannelConfig {
            cfo: 2e-3,
            phase_offset: 2.0,
            ..ChannelConfig::default()
        };
        let r = loopback(ModScheme::Qpsk, &sc, &ch, &sc);
        assert_eq!(r.stats.bit_errors, Some(0));
        assert!(r.stats.cfo_locked);
        assert!((r.sync.cfo_estimate - 2e-3).abs() < 1e-5);
    }

    #[test]
    fn wrong_seed_gives_coin_flips() {
        let sc = ShapingConfig::new(2718, 4, 0.3).unwrap();
        let attacker = ShapingConfig::new(3141, 4, 0.3).unwrap();
        let r = loopback(ModScheme::Qpsk, &sc, &ChannelConfig::default(), &attacker);
        let ber = r.stats.bit_errors.unwrap() as f64 / r.stats.bits_compared as f64;
        assert_eq!(r.stats.bits_compared, 10_000);
        assert!((ber - 0.5).abs() < 0.02, "{ber}");
    }

    #[test]
    fn qpsk_ber_at_10_db() {
        let sc = ShapingConfig::identity(5);
        let mut errors = 0;
        let mut bits = 0;
        for seed in 0..100 {
            let ch = ChannelConfig {
                es_n0_db: 10.0,
                phase_offset: 0.3,
                noise_seed: seed,
                noise_reference: NoiseReference::Nominal(1.0),
                ..ChannelConfig::default()
            };
            let r = loopback(ModScheme::Qpsk, &sc, &ch, &sc);
            errors += r.stats.bit_errors.unwrap();
            bits += r.stats.bits_compared;
        }
        let ber = errors as f64 / bits as f64;
        let theory = q_function(10f64.sqrt());
        assert!((ber / theory - 1.0).abs() < 0.15, "{ber} vs {theory}");
    }

    #[test]
    fn effective_order_tracking_round_trip() {
        let sc = ShapingConfig::new(44, 4, 0.5).unwrap();
        let spec = FrameSpec::default();
        let mc = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        let bits = expand_message_to_bits(&spec.message, spec.data_bits).unwrap();
        let frame = build_frame(&bits, &spec, &mc, &sc).unwrap();
        let ch = ChannelConfig {
            phase_offset: 0.8,
            ..ChannelConfig::default()
        };
        let rx = apply_channel(&frame.samples(), &ch).unwrap();
        let sync = SyncConfig {
            tracking: Tracking::EffectiveOrder,
            ..SyncConfig::for_link(ModScheme::Qpsk, 4).unwrap()
        };
        let r = receive_frame(&rx, &mc, &sc, &spec, &sync, Some(&frame.payload_bits)).unwrap();
        assert_eq!(r.stats.bit_errors, Some(0));
        assert!(r.stats.evm_pre < 1e-9);
    }

    #[test]
    fn key_aided_tracking_survives_sixteen_fold_shaping() {
        let spec = FrameSpec::default();
        let mc = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        let bits = expand_message_to_bits(&spec.message, spec.data_bits).unwrap();
        let mut errors = [0usize; 2];
        for seed in 0..10 {
            let sc = ShapingConfig::new(seed, 4, 1.0).unwrap();
            let frame = build_frame(&bits, &spec, &mc, &sc).unwrap();
            let ch = ChannelConfig {
                es_n0_db: 8.0,
                noise_seed: 500 + seed,
                noise_reference: NoiseReference::Nominal(1.0),
                ..ChannelConfig::default()
            };
            let rx = apply_channel(&frame.samples(), &ch).unwrap();
            for (k, tracking) in [Tracking::KeyAided, Tracking::EffectiveOrder].into_iter().enumerate() {
                let sync = SyncConfig {
                    tracking,
                    ..SyncConfig::for_link(ModScheme::Qpsk, 4).unwrap()
                };
                let r = receive_frame(&rx, &mc, &sc, &spec, &sync, Some(&frame.payload_bits)).unwrap();
                errors[k] += r.stats.bit_errors.unwrap();
            }
        }
        let ber = errors.map(|e| e as f64 / 100_000.0);
        let theory = q_function(10f64.powf(0.8).sqrt());
        assert!((ber[0] / theory - 1.0).abs() < 0.25, "key-aided {} vs {theory}", ber[0]);
        assert!(ber[1] > 5.0 * theory, "16-fold loop unexpectedly clean: {}", ber[1]);
    }

    #[test]
    fn truncated_capture() {
        let spec = FrameSpec::default();
        let mc = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        let sc = ShapingConfig::identity(0);
        let frame = build_frame(&[], &spec, &mc, &sc).unwrap().samples();
        let sync = SyncConfig::for_link(ModScheme::Qpsk, 0).unwrap();
        assert!(matches!(
            receive_frame(&frame[..4000], &mc, &sc, &spec, &sync, None),
            Err(Error::LengthMismatch { expected: 5012, actual: 4000 })
        ));
        let silence = vec![Complex64::new(0.0, 0.0); 6000];
        assert!(matches!(
            receive_frame(&silence, &mc, &sc, &spec, &sync, None),
            Err(Error::NoFrame { .. })
        ));
    }
}
