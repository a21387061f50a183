//! Conventional MPSK modulation and the bit/symbol mapping.
//!
//! Constellation point `k` of an M-PSK scheme sits at angle `2πk/M` with no
//! scheme-specific offset. Bits are grouped big-endian per symbol and Gray
//! labelled around the circle, so points at adjacent angles differ in exactly
//! one bit. QAM schemes exist only as classifier classes; their grids are
//! normalized to unit average power.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One complex baseband sample.
pub type IqSample = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModScheme {
    Bpsk,
    Qpsk,
    Psk8,
    Psk16,
    Psk32,
    Psk64,
    Qam8,
    Qam16,
    Qam32,
    Qam64,
}

impl ModScheme {
    /// The ten classifier classes.
    pub const ALL: [ModScheme; 10] = [
        ModScheme::Bpsk,
        ModScheme::Qpsk,
        ModScheme::Psk8,
        ModScheme::Psk16,
        ModScheme::Psk32,
        ModScheme::Psk64,
        ModScheme::Qam8,
        ModScheme::Qam16,
        ModScheme::Qam32,
        ModScheme::Qam64,
    ];

    pub fn order(self) -> usize {
        match self {
            ModScheme::Bpsk => 2,
            ModScheme::Qpsk => 4,
            ModScheme::Psk8 | ModScheme::Qam8 => 8,
            ModScheme::Psk16 | ModScheme::Qam16 => 16,
            ModScheme::Psk32 | ModScheme::Qam32 => 32,
            ModScheme::Psk64 | ModScheme::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }

    pub fn is_psk(self) -> bool {
        !matches!(
            self,
            ModScheme::Qam8 | ModScheme::Qam16 | ModScheme::Qam32 | ModScheme::Qam64
        )
    }

    /// The PSK scheme of the given order, if there is one.
    pub fn psk_of_order(order: usize) -> Option<ModScheme> {
        match order {
            2 => Some(ModScheme::Bpsk),
            4 => Some(ModScheme::Qpsk),
            8 => Some(ModScheme::Psk8),
            16 => Some(ModScheme::Psk16),
            32 => Some(ModScheme::Psk32),
            64 => Some(ModScheme::Psk64),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModScheme::Bpsk => "BPSK",
            ModScheme::Qpsk => "QPSK",
            ModScheme::Psk8 => "8PSK",
            ModScheme::Psk16 => "16PSK",
            ModScheme::Psk32 => "32PSK",
            ModScheme::Psk64 => "64PSK",
            ModScheme::Qam8 => "8QAM",
            ModScheme::Qam16 => "16QAM",
            ModScheme::Qam32 => "32QAM",
            ModScheme::Qam64 => "64QAM",
        }
    }

    /// Ideal constellation at unit scale.
    ///
    /// PSK points lie on the unit circle. QAM grids have unit average power:
    /// 8QAM is the 4x2 rectangle, 16/64QAM are square, 32QAM is the 6x6 cross.
    pub fn unit_constellation(self) -> Vec<IqSample> {
        let m = self.order();
        if self.is_psk() {
            return (0..m)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
                .collect();
        }
        let levels = |n: usize| -> Vec<f64> {
            (0..n).map(|i| 2.0 * i as f64 - (n as f64 - 1.0)).collect()
        };
        let points: Vec<IqSample> = match self {
            ModScheme::Qam8 => {
                let (li, lq) = (levels(4), levels(2));
                lq.iter()
                    .flat_map(|&q| li.iter().map(move |&i| Complex64::new(i, q)))
                    .collect()
            }
            ModScheme::Qam32 => {
                let l = levels(6);
                l.iter()
                    .flat_map(|&q| l.iter().map(move |&i| Complex64::new(i, q)))
                    .filter(|p| !(p.re.abs() == 5.0 && p.im.abs() == 5.0))
                    .collect()
            }
            _ => {
                let side = (m as f64).sqrt() as usize;
                let l = levels(side);
                l.iter()
                    .flat_map(|&q| l.iter().map(move |&i| Complex64::new(i, q)))
                    .collect()
            }
        };
        let power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        let scale = power.sqrt().recip();
        points.into_iter().map(|p| p * scale).collect()
    }
}

impl fmt::Display for ModScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        ModScheme::ALL
            .into_iter()
            .find(|m| m.name() == upper)
            .ok_or_else(|| Error::format("modulation scheme", format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModConfig {
    pub scheme: ModScheme,
    /// Base symbol magnitude.
    pub amplitude: f64,
}

impl ModConfig {
    pub fn new(scheme: ModScheme, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::Domain(format!("amplitude must be > 0, got {amplitude}")));
        }
        Ok(ModConfig { scheme, amplitude })
    }

    pub fn constellation(&self) -> Vec<IqSample> {
        self.scheme
            .unit_constellation()
            .into_iter()
            .map(|p| p * self.amplitude)
            .collect()
    }
}

#[inline]
pub fn gray_encode(v: usize) -> usize {
    v ^ (v >> 1)
}

#[inline]
pub fn gray_decode(mut g: usize) -> usize {
    let mut v = g;
    while g > 1 {
        g >>= 1;
        v ^= g;
    }
    v
}

/// Groups bits big-endian per symbol and returns the constellation position
/// that carries each group.
///
/// Position `p` carries the label `gray_encode(p)`, so the position of value
/// `v` is `gray_decode(v)`.
pub fn bits_to_symbol_indices(bits: &[u8], scheme: ModScheme) -> Result<Vec<usize>> {
    let bps = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::LengthNotDivisible {
            len: bits.len(),
            bits_per_symbol: bps,
        });
    }
    Ok(bits
        .chunks_exact(bps)
        .map(|chunk| {
            let value = chunk
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0));
            gray_decode(value)
        })
        .collect())
}

pub fn symbol_indices_to_bits(indices: &[usize], scheme: ModScheme) -> Result<Vec<u8>> {
    let order = scheme.order();
    let bps = scheme.bits_per_symbol();
    let mut bits = Vec::with_capacity(indices.len() * bps);
    for &index in indices {
        if index >= order {
            return Err(Error::IndexOutOfRange { index, order });
        }
        let label = gray_encode(index);
        bits.extend((0..bps).rev().map(|shift| ((label >> shift) & 1) as u8));
    }
    Ok(bits)
}

pub fn modulate(indices: &[usize], cfg: &ModConfig) -> Result<Vec<IqSample>> {
    let points = cfg.constellation();
    indices
        .iter()
        .map(|&index| {
            points.get(index).copied().ok_or(Error::IndexOutOfRange {
                index,
                order: points.len(),
            })
        })
        .collect()
}

/// Nearest-point decisions; equidistant points resolve to the lowest index.
pub fn demodulate(samples: &[IqSample], cfg: &ModConfig) -> Vec<usize> {
    let points = cfg.constellation();
    samples.iter().map(|s| nearest_point(*s, &points)).collect()
}

pub(crate) fn nearest_point(sample: IqSample, points: &[IqSample]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, p) in points.iter().enumerate() {
        let d = (sample - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: IqSample, b: IqSample) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn scheme_orders() {
        for m in ModScheme::ALL {
            assert!(m.order().is_power_of_two());
            assert!((2..=64).contains(&m.order()));
            assert_eq!(1 << m.bits_per_symbol(), m.order());
            assert_eq!(m.unit_constellation().len(), m.order());
            assert_eq!(m.name().parse::<ModScheme>().unwrap(), m);
        }
        assert_eq!(ModScheme::ALL.iter().filter(|m| m.is_psk()).count(), 6);
        assert!("9PSK".parse::<ModScheme>().is_err());
    }

    #[test]
    fn qam_grids_have_unit_power() {
        for m in ModScheme::ALL.into_iter().filter(|m| !m.is_psk()) {
            let pts = m.unit_constellation();
            let p = pts.iter().map(|x| x.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((p - 1.0).abs() < 1e-12, "{m}: {p}");
        }
    }

    #[test]
    fn bits_to_indices_examples() {
        assert_eq!(
            bits_to_symbol_indices(&[1, 0, 1], ModScheme::Bpsk).unwrap(),
            vec![1, 0, 1]
        );
        assert_eq!(
            bits_to_symbol_indices(&[0, 0, 1, 1], ModScheme::Qpsk).unwrap(),
            vec![0, 2]
        );
        assert!(matches!(
            bits_to_symbol_indices(&[0; 7], ModScheme::Psk8),
            Err(Error::LengthNotDivisible { len: 7, bits_per_symbol: 3 })
        ));
    }

    #[test]
    fn indices_to_bits_examples() {
        assert_eq!(
            symbol_indices_to_bits(&[0, 2], ModScheme::Qpsk).unwrap(),
            vec![0, 0, 1, 1]
        );
        assert_eq!(
            symbol_indices_to_bits(&[0, 1], ModScheme::Bpsk).unwrap(),
            vec![0, 1]
        );
        assert!(matches!(
            symbol_indices_to_bits(&[4], ModScheme::Qpsk),
            Err(Error::IndexOutOfRange { index: 4, order: 4 })
        ));
    }

    #[test]
    fn modulate_examples() {
        let bpsk = ModConfig::new(ModScheme::Bpsk, 1.0).unwrap();
        let qpsk = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        let qpsk2 = ModConfig::new(ModScheme::Qpsk, 2.0).unwrap();
        assert!(close(modulate(&[0], &bpsk).unwrap()[0], Complex64::new(1.0, 0.0)));
        assert!(close(modulate(&[1], &qpsk).unwrap()[0], Complex64::new(0.0, 1.0)));
        assert!(close(modulate(&[3], &qpsk2).unwrap()[0], Complex64::new(0.0, -2.0)));
        assert!(matches!(
            modulate(&[2], &bpsk),
            Err(Error::IndexOutOfRange { index: 2, order: 2 })
        ));
        assert!(ModConfig::new(ModScheme::Qpsk, 0.0).is_err());
        assert!(ModConfig::new(ModScheme::Qpsk, f64::NAN).is_err());
    }

    #[test]
    fn demodulate_examples() {
        let qpsk = ModConfig::new(ModScheme::Qpsk, 1.0).unwrap();
        assert_eq!(demodulate(&[Complex64::new(0.9, 0.1)], &qpsk), vec![0]);
        assert_eq!(demodulate(&[Complex64::new(0.0, 0.0)], &qpsk), vec![0]);
    }

    #[test]
    fn noiseless_round_trip_every_point() {
        for m in ModScheme::ALL {
            let cfg = ModConfig::new(m, 1.7).unwrap();
            let idx: Vec<usize> = (0..m.order()).collect();
            let iq = modulate(&idx, &cfg).unwrap();
            assert_eq!(demodulate(&iq, &cfg), idx, "{m}");
        }
    }

    #[test]
    fn psk_energy_is_exact() {
        for m in ModScheme::ALL.into_iter().filter(|m| m.is_psk()) {
            let cfg = ModConfig::new(m, 2.5).unwrap();
            for p in cfg.constellation() {
                assert!((p.norm() - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjacent_psk_points_differ_in_one_bit() {
        for m in ModScheme::ALL.into_iter().filter(|m| m.is_psk()) {
            let order = m.order();
            let idx: Vec<usize> = (0..order).collect();
            let bits = symbol_indices_to_bits(&idx, m).unwrap();
            let bps = m.bits_per_symbol();
            for k in 0..order {
                let a = &bits[k * bps..(k + 1) * bps];
                let n = (k + 1) % order;
                let b = &bits[n * bps..(n + 1) * bps];
                let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
                assert_eq!(diff, 1, "{m}: positions {k} and {n}");
            }
        }
    }

    #[test]
    fn gray_is_a_bijection() {
        for v in 0..64 {
            assert_eq!(gray_decode(gray_encode(v)), v);
            assert_eq!(gray_encode(gray_decode(v)), v);
        }
    }

    proptest! {
        #[test]
        fn bits_round_trip(scheme_ix in 0usize..6, raw in proptest::collection::vec(0u8..2, 0..300)) {
            let scheme = ModScheme::ALL[scheme_ix];
            let bps = scheme.bits_per_symbol();
            let bits = &raw[..raw.len() - raw.len() % bps];
            let idx = bits_to_symbol_indices(bits, scheme).unwrap();
            prop_assert_eq!(idx.len(), bits.len() / bps);
            prop_assert!(idx.iter().all(|&i| i < scheme.order()));
            prop_assert_eq!(symbol_indices_to_bits(&idx, scheme).unwrap(), bits.to_vec());
        }
    }
}
