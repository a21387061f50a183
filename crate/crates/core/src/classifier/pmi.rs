//! Probability of modulation identification for shaped QPSK.
//!
//! CSV layout, one row per sweep point:
//!
//! ```text
//! I_m,I_p,es_n0_db,BPSK,QPSK,8PSK,16PSK,32PSK,64PSK,8QAM,16QAM,32QAM,64QAM,trials
//! ```

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::MIN_BLOCK_LEN;
use super::model::{class_index, ClassifierModel, NUM_CLASSES};
use crate::channel::{apply_channel, ChannelConfig};
use crate::error::{Error, Result};
use crate::modem::{modulate, IqSample, ModConfig, ModScheme};
use crate::rng::derive_seed;
use crate::shaping::{apply_shaping, FactorStream, ShapingConfig};

pub const MIN_PMI_TRIALS: usize = 200;
pub const DEFAULT_PMI_ES_N0_DB: f64 = 20.0;

pub const PMI_PREFIX: [&str; 3] = ["I_m", "I_p", "es_n0_db"];

/// One shaping setting the eavesdropper is tested against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmiPoint {
    pub i_m: f64,
    pub i_p: u32,
    pub es_n0_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmiReport {
    pub point: PmiPoint,
    /// Fraction of trials labelled with each class, [`ModScheme::ALL`] order.
    pub probabilities: [f64; NUM_CLASSES],
    pub trials: usize,
}

impl PmiReport {
    pub fn from_predictions(point: PmiPoint, predictions: &[ModScheme]) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut counts = [0usize; NUM_CLASSES];
        for &p in predictions {
            counts[class_index(p)] += 1;
        }
        let n = predictions.len() as f64;
        Ok(PmiReport {
            point,
            probabilities: counts.map(|c| c as f64 / n),
            trials: predictions.len(),
        })
    }

    pub fn pmi(&self, scheme: ModScheme) -> f64 {
        self.probabilities[class_index(scheme)]
    }

    /// Most frequent label; ties go to the earlier class.
    pub fn top(&self) -> ModScheme {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        ModScheme::ALL[best]
    }
}

/// Random QPSK at amplitude 1, shaped with `shaping`, then a random carrier
/// phase and AWGN.
pub fn shaped_qpsk_block(
    shaping: &ShapingConfig,
    es_n0_db: f64,
    seed: u64,
    len: usize,
) -> Result<Vec<IqSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let indices: Vec<usize> = (0..len).map(|_| rng.random_range(0..4)).collect();
    let clean = modulate(&indices, &ModConfig::new(ModScheme::Qpsk, 1.0)?)?;
    let shaped = apply_shaping(&clean, &FactorStream::generate(shaping, len))?;
    let channel = ChannelConfig {
        phase_offset: rng.random_range(0.0..TAU),
        ..ChannelConfig::awgn(es_n0_db, derive_seed(seed, &[1]))
    };
    apply_channel(&shaped, &channel)
}

/// Classifies one trial at `point`. Shaping seed, data, carrier phase and
/// noise all come from `seed`.
pub fn pmi_trial(point: PmiPoint, model: &ClassifierModel, seed: u64) -> Result<ModScheme> {
    let shaping = ShapingConfig::new(derive_seed(seed, &[2]), point.i_p, point.i_m)?;
    let block = shaped_qpsk_block(&shaping, point.es_n0_db, seed, MIN_BLOCK_LEN)?;
    Ok(model.classify(&block)?.scheme)
}

/// Per-trial seed for trial `trial` at sweep point `point_index`.
pub fn trial_seed(master: u64, point_index: usize, trial: usize) -> u64 {
    derive_seed(master, &[point_index as u64, trial as u64])
}

/// Runs `trials` classifications at every point, sequentially.
pub fn pmi_sweep(
    points: &[PmiPoint],
    model: &ClassifierModel,
    trials: usize,
    seed: u64,
) -> Result<Vec<PmiReport>> {
    if trials < MIN_PMI_TRIALS {
        return Err(Error::Domain(format!(
            "PMI needs at least {MIN_PMI_TRIALS} trials per point, got {trials}"
        )));
    }
    points
        .iter()
        .enumerate()
        .map(|(i, &point)| {
            let labels = (0..trials)
                .map(|t| pmi_trial(point, model, trial_seed(seed, i, t)))
                .collect::<Result<Vec<_>>>()?;
            PmiReport::from_predictions(point, &labels)
        })
        .collect()
}

pub fn pmi_csv_header() -> String {
    let mut h = PMI_PREFIX.join(",");
    for s in ModScheme::ALL {
        write!(h, ",{s}").unwrap();
    }
    h.push_str(",trials");
    h
}

pub fn pmi_csv_row(r: &PmiReport) -> String {
    let mut row = format!("{},{},{}", r.point.i_m, r.point.i_p, r.point.es_n0_db);
    for p in r.probabilities {
        write!(row, ",{p}").unwrap();
    }
    write!(row, ",{}", r.trials).unwrap();
    row
}

/// Header plus one row per report; no trailing comment lines.
pub fn pmi_to_csv(reports: &[PmiReport]) -> String {
    let mut out = pmi_csv_header();
    out.push('\n');
    for r in reports {
        out.push_str(&pmi_csv_row(r));
        out.push('\n');
    }
    out
}

fn pmi_err(detail: impl Into<String>) -> Error {
    Error::format("PMI CSV", detail)
}

/// Parses a PMI CSV, skipping `#` comment lines. Rows must be proper
/// distributions.
pub fn parse_pmi_csv(text: &str) -> Result<Vec<PmiReport>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| pmi_err(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != pmi_csv_header() {
        return Err(pmi_err(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| pmi_err(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| pmi_err(format!("row {}: bad column {}", n + 1, i + 1)))
        };
        let i_p: u32 = rec
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| pmi_err(format!("row {}: bad I_p", n + 1)))?;
        let trials: usize = rec
            .get(3 + NUM_CLASSES)
            .and_then(|v| v.parse().ok())
            .filter(|&t| t > 0)
            .ok_or_else(|| pmi_err(format!("row {}: bad trials", n + 1)))?;
        let mut probabilities = [0.0; NUM_CLASSES];
        for (k, p) in probabilities.iter_mut().enumerate() {
            *p = num(3 + k)?;
            if !(0.0..=1.0).contains(p) {
                return Err(pmi_err(format!("row {}: probability {p} outside [0,1]", n + 1)));
            }
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(pmi_err(format!("row {}: probabilities sum to {total}", n + 1)));
        }
        out.push(PmiReport {
            point: PmiPoint {
                i_m: num(0)?,
                i_p,
                es_n0_db: num(2)?,
            },
            probabilities,
            trials,
        });
    }
    Ok(out)
}
