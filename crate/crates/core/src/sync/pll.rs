use std::f64::consts::PI;

use num_complex::Complex64;

use super::SyncConfig;
use crate::modem::IqSample;

const DAMPING: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct PllOutput {
    /// Derotated samples.
    pub samples: Vec<IqSample>,
    /// Loop phase applied to each sample.
    pub phases: Vec<f64>,
}

/// Second-order decision-directed carrier loop with an `M_eff`-fold phase
/// detector and a proportional-plus-integrator filter.
///
/// The detector error is the angle to the nearest `M_eff`-PSK point, weighted
/// by the sample magnitude relative to the block RMS. Lock is ambiguous up to
/// multiples of `2π/M_eff`.
pub fn carrier_sync_pll(samples: &[IqSample], cfg: &SyncConfig) -> PllOutput {
    let m = cfg.effective_order as f64;
    let (kp, ki) = loop_gains(cfg.pll_loop_bandwidth);
    let rms = (samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len().max(1) as f64)
        .sqrt();
    let scale = if rms > 0.0 { rms.recip() } else { 0.0 };

    let mut phase = 0.0f64;
    let mut integrator = 0.0f64;
    let mut out = Vec::with_capacity(samples.len());
    let mut phases = Vec::with_capacity(samples.len());
    for s in samples {
        let y = s * Complex64::from_polar(1.0, -phase);
        out.push(y);
        phases.push(phase);
        let err = wrap(m * y.arg()) / m * (y.norm() * scale);
        integrator += ki * err;
        phase += kp * err + integrator;
    }
    PllOutput {
        samples: out,
        phases,
    }
}

/// Mean residual carrier phase of a block, modulo `2π/order`.
pub fn residual_phase_error(samples: &[IqSample], order: usize) -> f64 {
    let acc: Complex64 = samples
        .iter()
        .filter(|s| s.norm() > 0.0)
        .map(|s| (s / s.norm()).powu(order as u32))
        .sum();
    acc.arg() / order as f64
}

fn loop_gains(bandwidth: f64) -> (f64, f64) {
    let theta = bandwidth / (DAMPING + 0.25 / DAMPING);
    let denom = 1.0 + 2.0 * DAMPING * theta + theta * theta;
    (4.0 * DAMPING * theta / denom, 4.0 * theta * theta / denom)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}
