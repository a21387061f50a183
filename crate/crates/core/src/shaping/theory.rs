//! Analytic power and error-rate expressions for the ring-shaped signal.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

use crate::error::{Error, Result};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Mean shaped amplitude `A·(I_m + 1)/2`.
pub fn ring_mean_amplitude(amplitude: f64, magnitude_intensity: f64) -> Result<f64> {
    check_amplitude(amplitude)?;
    check_intensity(magnitude_intensity)?;
    Ok(amplitude * (magnitude_intensity + 1.0) / 2.0)
}

/// Ring signal power as the squared mean amplitude, `(A·(I_m + 1)/2)²`.
///
/// This is not `E[|S_n|²]`; the true mean power is `A²(1 + I_m + I_m²)/3`.
pub fn ring_power(amplitude: f64, magnitude_intensity: f64) -> Result<f64> {
    ring_mean_amplitude(amplitude, magnitude_intensity).map(|a| a * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BerMode {
    /// `2·Q(√(((I_m+1)/2)² · E0/N0))`, the magnitude factor replaced by its mean.
    #[default]
    Literal,
    /// `E_M[2·Q(√(M² · E0/N0))]` with `M ~ Uniform[I_m, 1]`.
    Averaged,
}

/// Ring-shaped error probability at linear `E0/N0`, where `E0` is the
/// unshaped symbol energy.
pub fn theoretical_ber_ring(es_n0: f64, magnitude_intensity: f64, mode: BerMode) -> Result<f64> {
    if !(es_n0 >= 0.0) || es_n0.is_infinite() {
        return Err(Error::Domain(format!("E0/N0 must be finite and >= 0, got {es_n0}")));
    }
    check_intensity(magnitude_intensity)?;
    let term = |m: f64| 2.0 * q_function((m * m * es_n0).sqrt());
    Ok(match mode {
        BerMode::Literal => term((magnitude_intensity + 1.0) / 2.0),
        BerMode::Averaged if magnitude_intensity >= 1.0 => term(1.0),
        BerMode::Averaged => {
            simpson(term, magnitude_intensity, 1.0, 2048) / (1.0 - magnitude_intensity)
        }
    })
}

/// Closed-form Gray-coded M-PSK bit error rate at linear `Es/N0`.
///
/// Exact for BPSK and QPSK; the nearest-neighbour approximation
/// `(2/log2 M)·Q(√(2Es/N0)·sin(π/M))` for higher orders.
pub fn mpsk_ber(order: usize, es_n0: f64) -> f64 {
    match order {
        2 => q_function((2.0 * es_n0).sqrt()),
        4 => q_function(es_n0.sqrt()),
        m => {
            let k = m.trailing_zeros() as f64;
            (2.0 / k) * q_function((2.0 * es_n0).sqrt() * (PI / m as f64).sin())
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + h * i as f64)
        })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn check_amplitude(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("amplitude must be > 0, got {a}")))
    }
}

// The analytic expressions stay defined at I_m = 0.
fn check_intensity(im: f64) -> Result<()> {
    if (0.0..=1.0).contains(&im) {
        Ok(())
    } else {
        Err(Error::Domain(format!("magnitude intensity must lie in [0, 1], got {im}")))
    }
}
