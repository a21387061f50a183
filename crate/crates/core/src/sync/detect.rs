use num_complex::Complex64;

use super::SyncResult;
use crate::error::{Error, Result};
use crate::modem::IqSample;

/// Normalized cross-correlation search for a known header.
///
/// The statistic at lag `l` is `|Σ x[l+i]·h[i]*| / (‖h‖·‖x[l..l+L]‖)`. The
/// frame starts at the strongest lag; the argument of the complex correlation
/// there is the carrier phase at the header. Lags beyond `max_lag` are not
/// searched.
pub fn frame_detect(
    samples: &[IqSample],
    header: &[IqSample],
    threshold: f64,
    max_lag: Option<usize>,
) -> Result<SyncResult> {
    let len = header.len();
    if len == 0 || samples.len() < len {
        return Err(Error::TooFewSamples {
            needed: len.max(1),
            got: samples.len(),
        });
    }
    let header_norm = header.iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt();
    let last = (samples.len() - len).min(max_lag.unwrap_or(usize::MAX));

    let mut window_energy: f64 = samples[..len].iter().map(|s| s.norm_sqr()).sum();
    let mut best = (0usize, 0.0f64, Complex64::new(0.0, 0.0));
    for lag in 0..=last {
        if lag > 0 {
            window_energy += samples[lag + len - 1].norm_sqr() - samples[lag - 1].norm_sqr();
        }
        let corr: Complex64 = samples[lag..lag + len]
            .iter()
            .zip(header)
            .map(|(x, h)| x * h.conj())
            .sum();
        let denom = header_norm * window_energy.max(0.0).sqrt();
        let rho = if denom > 0.0 { (corr.norm() / denom).min(1.0) } else { 0.0 };
        if rho > best.1 {
            best = (lag, rho, corr);
        }
    }

    let (frame_start, peak, corr) = best;
    if peak < threshold {
        return Err(Error::NoFrame { peak, threshold });
    }
    Ok(SyncResult {
        frame_start,
        cfo_estimate: 0.0,
        phase_estimate: corr.arg(),
        correlation_peak: peak,
    })
}
