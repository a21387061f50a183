//! Frames with a fixed antipodal header and separately mapped, shaped data.
//!
//! Only the data bits pass through the bit/symbol mapping and the shaping
//! transform. The header is generated on its own, so its length and content
//! are the same for every scheme and every shaping configuration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::{bits_to_symbol_indices, modulate, IqSample, ModConfig, ModScheme};
use crate::shaping::{apply_shaping, FactorStream, ShapingConfig};

/// Canonical 12-chip antipodal header. Aperiodic autocorrelation sidelobes
/// are at most 2, against a peak of 12.
pub const HEADER_PATTERN: [i8; 12] = [1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1, 1];

pub const DEFAULT_HEADER_SYMBOLS: usize = 12;
pub const DEFAULT_DATA_BITS: usize = 10_000;
pub const DEFAULT_MESSAGE: &str = "hello world ###";
pub const MIN_HEADER_SYMBOLS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSpec {
    pub header_symbols: usize,
    pub data_bits: usize,
    pub message: Vec<u8>,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            header_symbols: DEFAULT_HEADER_SYMBOLS,
            data_bits: DEFAULT_DATA_BITS,
            message: DEFAULT_MESSAGE.as_bytes().to_vec(),
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.header_symbols < MIN_HEADER_SYMBOLS {
            return Err(Error::Domain(format!(
                "header needs at least {MIN_HEADER_SYMBOLS} symbols, got {}",
                self.header_symbols
            )));
        }
        Ok(())
    }

    /// Data symbols per frame; `data_bits` is zero-padded up to a whole
    /// number of symbols.
    pub fn data_symbols(&self, scheme: ModScheme) -> usize {
        self.data_bits.div_ceil(scheme.bits_per_symbol())
    }

    pub fn padded_data_bits(&self, scheme: ModScheme) -> usize {
        self.data_symbols(scheme) * scheme.bits_per_symbol()
    }

    pub fn frame_symbols(&self, scheme: ModScheme) -> usize {
        self.header_symbols + self.data_symbols(scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub header: Vec<IqSample>,
    pub data: Vec<IqSample>,
    /// Data bits after zero padding.
    pub payload_bits: Vec<u8>,
}

impl Frame {
    /// Header followed by data.
    pub fn samples(&self) -> Vec<IqSample> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.header);
        out.extend_from_slice(&self.data);
        out
    }

    pub fn len(&self) -> usize {
        self.header.len() + self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Header chips in `{+1, -1}`; lengths other than 12 repeat the canonical
/// pattern cyclically.
pub fn header_chips(len: usize) -> Vec<i8> {
    HEADER_PATTERN.iter().copied().cycle().take(len).collect()
}

/// `s_k = A·p_k·(1, 0)`.
pub fn build_header(spec: &FrameSpec, amplitude: f64) -> Result<Vec<IqSample>> {
    spec.validate()?;
    Ok(header_chips(spec.header_symbols)
        .into_iter()
        .map(|c| Complex64::new(amplitude * f64::from(c), 0.0))
        .collect())
}

pub fn build_frame(
    bits: &[u8],
    spec: &FrameSpec,
    mod_cfg: &ModConfig,
    shaping: &ShapingConfig,
) -> Result<Frame> {
    spec.validate()?;
    if !mod_cfg.scheme.is_psk() {
        return Err(Error::NotPsk(mod_cfg.scheme));
    }
    if bits.len() > spec.data_bits {
        return Err(Error::PayloadTooLarge {
            bits: bits.len(),
            capacity: spec.data_bits,
        });
    }
    let mut payload_bits = bits.to_vec();
    payload_bits.resize(spec.padded_data_bits(mod_cfg.scheme), 0);

    let indices = bits_to_symbol_indices(&payload_bits, mod_cfg.scheme)?;
    let symbols = modulate(&indices, mod_cfg)?;
    let factors = FactorStream::generate(shaping, symbols.len());
    let data = apply_shaping(&symbols, &factors)?;
    let header = build_header(spec, mod_cfg.amplitude)?;
    Ok(Frame {
        header,
        data,
        payload_bits,
    })
}

/// Big-endian bit expansion of `message`, repeated and truncated to
/// `data_bits`.
pub fn expand_message_to_bits(message: &[u8], data_bits: usize) -> Result<Vec<u8>> {
    if message.is_empty() {
        return Err(Error::EmptyMessage);
    }
    Ok(message
        .iter()
        .flat_map(|&byte| (0..8).rev().map(move |s| (byte >> s) & 1))
        .cycle()
        .take(data_bits)
        .collect())
}

/// Packs big-endian bits into bytes; a trailing partial byte is dropped.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::{demodulate, symbol_indices_to_bits};
    use crate::shaping::invert_shaping;

    fn aperiodic_autocorrelation(p: &[i8]) -> Vec<i32> {
        (0..p.len())
            .map(|lag| {
                p[..p.len() - lag]
                    .iter()
                    .zip(&p[lag..])
                    .map(|(a, b)| i32::from(*a) * i32::from(*b))
                    .sum::<i32>()
                    .abs()
            })
            .collect()
    }

    #[test]
    fn header_pattern_has_low_sidelobes() {
        let ac = aperiodic_autocorrelation(&HEADER_PATTERN);
        let peak = ac[0];
        let sidelobe = *ac[1..].iter().max().unwrap();
        assert_eq!(peak, 12);
        assert!(peak >= 3 * sidelobe, "peak {peak} sidelobe {sidelobe}");
    }

    #[test]
    fn header_is_twelve_antipodal_symbols() {
        let a = 1.3;
        let h = build_header(&FrameSpec::default(), a).unwrap();
        assert_eq!(h.len(), 12);
        for s in &h {
            assert!(*s == Complex64::new(a, 0.0) || *s == Complex64::new(-a, 0.0));
        }
        let short = FrameSpec {
            header_symbols: 3,
            ..FrameSpec::default()
        };
        assert!(build_header(&short, 1.0).is_err());
    }

    #[test]
    fn qpsk_default_frame_has_5012_symbols() {
        let spec = FrameSpec::default();
        let mc = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        let bits = expand_message_to_bits(&spec.message, spec.data_bits).unwrap();
        let frame = build_frame(&bits, &spec, &mc, &ShapingConfig::new(1, 2, 0.5).unwrap()).unwrap();
        assert_eq!(frame.len(), 5_012);
        assert_eq!(frame.samples().len(), 5_012);
    }

    #[test]
    fn frame_length_depends_only_on_bits_and_order() {
        let spec = FrameSpec::default();
        for scheme in ModScheme::ALL.into_iter().filter(|m| m.is_psk()) {
            let mc = ModConfig::new(scheme, 1.0).unwrap();
            for ip in 0..=4 {
                let sc = ShapingConfig::new(ip as u64, ip, 0.3).unwrap();
                let frame = build_frame(&[1, 0, 1], &spec, &mc, &sc).unwrap();
                assert_eq!(frame.header.len(), 12);
                assert_eq!(frame.len(), spec.frame_symbols(scheme));
                assert_eq!(frame.len(), 12 + 10_000usize.div_ceil(scheme.bits_per_symbol()));
            }
        }
    }

    #[test]
    fn header_bypasses_shaping() {
        let spec = FrameSpec::default();
        let mc = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        let reference = build_header(&spec, 1.0).unwrap();
        for ip in 0..=4 {
            for im in [0.1, 0.5, 1.0] {
                let sc = ShapingConfig::new(1234, ip, im).unwrap();
                let f = build_frame(&[], &spec, &mc, &sc).unwrap();
                assert_eq!(f.header, reference);
            }
        }
    }

    #[test]
    fn build_frame_errors() {
        let spec = FrameSpec {
            data_bits: 16,
            ..FrameSpec::default()
        };
        let sc = ShapingConfig::identity(0);
        let mc = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        assert!(matches!(
            build_frame(&[0; 17], &spec, &mc, &sc),
            Err(Error::PayloadTooLarge { bits: 17, capacity: 16 })
        ));
        let qam = ModConfig::new(ModScheme::Qam16, 1.0).unwrap();
        assert!(matches!(build_frame(&[0; 4], &spec, &qam, &sc), Err(Error::NotPsk(_))));
    }

    #[test]
    fn message_expansion() {
        assert_eq!(
            expand_message_to_bits(b"h", 8).unwrap(),
            vec![0, 1, 1, 0, 1, 0, 0, 0]
        );
        assert!(expand_message_to_bits(b"abc", 0).unwrap().is_empty());
        assert!(matches!(expand_message_to_bits(b"", 8), Err(Error::EmptyMessage)));
        let msg = DEFAULT_MESSAGE.as_bytes();
        assert_eq!(msg.len(), 15);
        let bits = expand_message_to_bits(msg, DEFAULT_DATA_BITS).unwrap();
        assert_eq!(bits.len(), 10_000);
        assert_eq!(bits_to_bytes(&bits[..120]), msg);
        assert_eq!(&bits[120..240], &bits[..120]);
    }

    #[test]
    fn noiseless_data_region_inverts_to_payload() {
        let spec = FrameSpec::default();
        for scheme in [ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Psk8, ModScheme::Psk64] {
            let mc = ModConfig::new(scheme, 1.0).unwrap();
            let sc = ShapingConfig::new(55, 4, 0.1).unwrap();
            let bits = expand_message_to_bits(&spec.message, spec.data_bits).unwrap();
            let frame = build_frame(&bits, &spec, &mc, &sc).unwrap();
            let f = FactorStream::generate(&sc, frame.data.len());
            let rx = invert_shaping(&frame.data, &f).unwrap();
            let out = symbol_indices_to_bits(&demodulate(&rx, &mc), scheme).unwrap();
            assert_eq!(out, frame.payload_bits);
            assert_eq!(&out[..bits.len()], &bits[..]);
        }
    }
}
