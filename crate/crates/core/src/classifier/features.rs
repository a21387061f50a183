//! Scale-invariant statistics of a received block.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::IqSample;

pub const MIN_BLOCK_LEN: usize = 1024;

/// Phase histogram resolution: four bins per point of the finest
/// (64-point) angle grid.
pub const PHASE_BINS: usize = 256;

/// A smoothed histogram bin counts as a peak above this multiple of the
/// mean bin height.
pub const PEAK_FACTOR: f64 = 2.0;

/// Angle grids `2^k`, `k = 1..=6`.
pub const HARMONICS: usize = 6;

pub const FEATURE_DIM: usize = 9 + HARMONICS;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "c20",
    "c40",
    "c41",
    "c42",
    "c63",
    "amp_mean",
    "amp_var",
    "amp_kurt",
    "phase_peaks",
    "grid2",
    "grid4",
    "grid8",
    "grid16",
    "grid32",
    "grid64",
];

/// Features of one block after normalization to unit RMS.
///
/// Cumulants are reported as magnitudes (`c42` keeps its sign since it is
/// real), so the vector does not depend on carrier phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub c20: f64,
    pub c40: f64,
    pub c41: f64,
    pub c42: f64,
    pub c63: f64,
    pub amp_mean: f64,
    pub amp_var: f64,
    pub amp_kurtosis: f64,
    /// Number of distinct peaks in the phase histogram.
    pub phase_peaks: f64,
    /// `|E[(s/|s|)^(2^k)]|` for `k = 1..=6`: how tightly the phases sit on
    /// a `2^k`-point grid (1 for an exact fit, near 0 for uniform phase).
    pub harmonics: [f64; HARMONICS],
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.c20,
            self.c40,
            self.c41,
            self.c42,
            self.c63,
            self.amp_mean,
            self.amp_var,
            self.amp_kurtosis,
            self.phase_peaks,
            self.harmonics[0],
            self.harmonics[1],
            self.harmonics[2],
            self.harmonics[3],
            self.harmonics[4],
            self.harmonics[5],
        ]
    }
}

pub fn extract_features(samples: &[IqSample]) -> Result<FeatureVector> {
    let n = samples.len();
    if n < MIN_BLOCK_LEN {
        return Err(Error::TooFewSamples {
            needed: MIN_BLOCK_LEN,
            got: n,
        });
    }
    let nf = n as f64;
    let power = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / nf;
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::Domain(format!("block power {power} is not usable")));
    }
    let scale = power.sqrt().recip();

    let zero = Complex64::new(0.0, 0.0);
    let (mut m20, mut m40, mut m41) = (zero, zero, zero);
    let (mut m42, mut m63) = (0.0, 0.0);
    let (mut a1, mut a2) = (0.0, 0.0);
    let mut hist = [0u32; PHASE_BINS];
    let mut harm = [zero; HARMONICS];
    for &raw in samples {
        let s = raw * scale;
        let p = s.norm_sqr();
        let s2 = s * s;
        m20 += s2;
        m40 += s2 * s2;
        m41 += s2 * p;
        m42 += p * p;
        m63 += p * p * p;
        let a = p.sqrt();
        a1 += a;
        a2 += p;
        if a > 0.0 {
            hist[phase_bin(raw.im.atan2(raw.re))] += 1;
            let mut u = s / a;
            for h in harm.iter_mut() {
                u = u * u;
                *h += u;
            }
        }
    }
    let m20 = m20 / nf;
    let m40 = m40 / nf;
    let m41 = m41 / nf;
    let m42 = m42 / nf;
    let m63 = m63 / nf;
    let m21 = a2 / nf;

    let c40 = m40 - 3.0 * m20 * m20;
    let c41 = m41 - 3.0 * m20 * m21;
    let c42 = m42 - m20.norm_sqr() - 2.0 * m21 * m21;
    let c63 = m63 - 9.0 * m42 * m21 + 12.0 * m21.powi(3)
        - 6.0 * (m20 * m41.conj()).re
        + 18.0 * m20.norm_sqr() * m21;

    let mean = a1 / nf;
    let var = (m21 - mean * mean).max(0.0);
    let mut c4 = 0.0;
    for &raw in samples {
        let d = (raw * scale).norm() - mean;
        c4 += d.powi(4);
    }
    let kurtosis = if var > 1e-12 { c4 / nf / (var * var) } else { 0.0 };

    Ok(FeatureVector {
        c20: m20.norm(),
        c40: c40.norm(),
        c41: c41.norm(),
        c42,
        c63: c63.abs(),
        amp_mean: mean,
        amp_var: var,
        amp_kurtosis: kurtosis,
        phase_peaks: count_peaks(&hist) as f64,
        harmonics: harm.map(|h| h.norm() / nf),
    })
}

fn phase_bin(angle: f64) -> usize {
    let x = angle.rem_euclid(TAU) / TAU * PHASE_BINS as f64;
    (x as usize).min(PHASE_BINS - 1)
}

/// Local maxima of the circularly 3-bin smoothed histogram that rise above
/// [`PEAK_FACTOR`] times the mean. A flat top two bins wide counts once.
fn count_peaks(hist: &[u32; PHASE_BINS]) -> usize {
    let n = PHASE_BINS;
    let smooth: Vec<u32> = (0..n)
        .map(|i| hist[(i + n - 1) % n] + hist[i] + hist[(i + 1) % n])
        .collect();
    let mean = smooth.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    (0..n)
        .filter(|&i| {
            let v = smooth[i];
            v as f64 > PEAK_FACTOR * mean && v > smooth[(i + n - 1) % n] && v >= smooth[(i + 1) % n]
        })
        .count()
}
