//! Flat `key = value` experiment configuration.
//!
//! One setting per line; `#` starts a comment. Unknown or repeated keys are
//! errors. Grid values are either comma-separated lists (`4, 6, 8`) or an
//! inclusive range `start:step:stop` (`0:2:10`).
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `experiment` | `ber_curve`, `ber_vs_im`, `ber_vs_ip`, `constellation_dump`, `pmi_sweep`, `dataset_gen` | set by the subcommand |
//! | `seed` | u64 | 1 |
//! | `trials` | frames (BER) or blocks (PMI) per grid point | per experiment |
//! | `schemes` | list of schemes | `QPSK` |
//! | `amplitude` | f64 > 0 | 1 |
//! | `es_n0_db` | grid, dB (`inf` allowed) | per experiment |
//! | `i_m` | grid in (0, 1] | per experiment |
//! | `i_p` | grid of integers 0..=16 | per experiment |
//! | `cfo` | cycles/symbol | 0 |
//! | `phase_offset` | radians | 0 |
//! | `noise_reference` | `nominal` (`Es = A²`) or `measured` | `nominal` |
//! | `receiver` | `full` (detect + track) or `coherent` (known timing and carrier) | `full` |
//! | `header_symbols` | usize >= 4 | 12 |
//! | `data_bits` | usize | 10000 |
//! | `lead_in` | noise-only symbols before each frame | 64 |
//! | `pll_bandwidth` | normalized loop bandwidth | 0.01 |
//! | `detect_threshold` | normalized correlation | 0.7 |
//! | `search_window` | lags searched, or `none` | `none` |
//! | `correct_cfo` | bool | true |
//! | `cfo_lock_ratio` | spectral peak-to-mean ratio | 25 |
//! | `tracking` | `key_aided` (loop after removing the known phase factors) or `effective_order` | `key_aided` |
//! | `dump_symbols` | symbols per constellation dump | 4096 |
//! | `blocks_per_class` | dataset blocks per class | 20000 |
//! | `block_len` | samples per dataset block | 1024 |
//! | `snr_grid` | dataset SNR grid | `0:1:30` |
//! | `model` | classifier model path | `<out>/model.txt` |
//! | `dataset` | dataset directory to train from | regenerate in memory |
//! | `out` | output directory | `out` |

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ringsig::channel::NoiseReference;
use ringsig::classifier::dataset::{DatasetSpec, DEFAULT_BLOCKS_PER_CLASS, DEFAULT_BLOCK_LEN};
use ringsig::framing::FrameSpec;
use ringsig::shaping::MAX_PHASE_INTENSITY;
use ringsig::sync::{SyncConfig, Tracking, DEFAULT_CFO_LOCK_RATIO, DEFAULT_DETECT_THRESHOLD, DEFAULT_LOOP_BANDWIDTH};
use ringsig::ModScheme;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    BerCurve,
    BerVsIm,
    BerVsIp,
    ConstellationDump,
    PmiSweep,
    DatasetGen,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BerCurve => "ber_curve",
            ExperimentKind::BerVsIm => "ber_vs_im",
            ExperimentKind::BerVsIp => "ber_vs_ip",
            ExperimentKind::ConstellationDump => "constellation_dump",
            ExperimentKind::PmiSweep => "pmi_sweep",
            ExperimentKind::DatasetGen => "dataset_gen",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            ExperimentKind::BerCurve,
            ExperimentKind::BerVsIm,
            ExperimentKind::BerVsIp,
            ExperimentKind::ConstellationDump,
            ExperimentKind::PmiSweep,
            ExperimentKind::DatasetGen,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverMode {
    Full,
    Coherent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub schemes: Vec<ModScheme>,
    pub amplitude: f64,
    pub es_n0_db: Option<Vec<f64>>,
    pub i_m: Option<Vec<f64>>,
    pub i_p: Option<Vec<u32>>,
    pub cfo: f64,
    pub phase_offset: f64,
    /// `true`: noise is referenced to `A²`; `false`: to the measured block power.
    pub nominal_noise: bool,
    pub receiver: ReceiverMode,
    pub header_symbols: usize,
    pub data_bits: usize,
    pub lead_in: usize,
    pub pll_bandwidth: f64,
    pub detect_threshold: f64,
    pub search_window: Option<usize>,
    pub correct_cfo: bool,
    pub cfo_lock_ratio: f64,
    pub tracking: Tracking,
    pub dump_symbols: usize,
    pub blocks_per_class: usize,
    pub block_len: usize,
    pub snr_grid: Vec<f64>,
    pub model: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            seed: 1,
            trials: None,
            schemes: vec![ModScheme::Qpsk],
            amplitude: 1.0,
            es_n0_db: None,
            i_m: None,
            i_p: None,
            cfo: 0.0,
            phase_offset: 0.0,
            nominal_noise: true,
            receiver: ReceiverMode::Full,
            header_symbols: 12,
            data_bits: 10_000,
            lead_in: 64,
            pll_bandwidth: DEFAULT_LOOP_BANDWIDTH,
            detect_threshold: DEFAULT_DETECT_THRESHOLD,
            search_window: None,
            correct_cfo: true,
            cfo_lock_ratio: DEFAULT_CFO_LOCK_RATIO,
            tracking: Tracking::KeyAided,
            dump_symbols: 4096,
            blocks_per_class: DEFAULT_BLOCKS_PER_CLASS,
            block_len: DEFAULT_BLOCK_LEN,
            snr_grid: ringsig::classifier::dataset::default_snr_grid(),
            model: None,
            dataset: None,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("bad number {v:?}"))
}

fn parse_finite(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_num(v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{v:?} must be finite"))
    }
}

/// `a, b, c` or inclusive `start:step:stop`.
pub fn parse_grid(v: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let out = match parts.as_slice() {
        [one] => one
            .split(',')
            .map(|p| parse_num::<f64>(p.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        [start, step, stop] => {
            let (start, step, stop) = (parse_finite(start)?, parse_finite(step)?, parse_finite(stop)?);
            if step == 0.0 || (stop - start) / step < 0.0 {
                return Err(format!("range {v:?} does not reach its end"));
            }
            let span = ((stop - start) / step + 1e-9).floor();
            if !(span < 100_000.0) {
                return Err(format!("range {v:?} has too many points"));
            }
            let n = span as usize + 1;
            (0..n).map(|k| start + step * k as f64).collect()
        }
        _ => return Err(format!("bad grid {v:?}")),
    };
    if out.is_empty() || out.iter().any(|x| x.is_nan()) {
        return Err(format!("bad grid {v:?}"));
    }
    Ok(out)
}

fn parse_ip_grid(v: &str) -> std::result::Result<Vec<u32>, String> {
    parse_grid(v)?
        .into_iter()
        .map(|x| {
            if x.fract() == 0.0 && (0.0..=MAX_PHASE_INTENSITY as f64).contains(&x) {
                Ok(x as u32)
            } else {
                Err(format!("I_p {x} is not an integer in 0..={MAX_PHASE_INTENSITY}"))
            }
        })
        .collect()
}

fn parse_im_grid(v: &str) -> std::result::Result<Vec<f64>, String> {
    let g = parse_grid(v)?;
    if let Some(x) = g.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(format!("I_m {x} outside (0, 1]"));
    }
    Ok(g)
}

fn parse_schemes(v: &str) -> std::result::Result<Vec<ModScheme>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<ModScheme>().map_err(|_| format!("unknown scheme {s:?}")))
        .collect()
}

fn positive(v: &str) -> std::result::Result<usize, String> {
    match parse_num::<usize>(v)? {
        0 => Err("must be positive".into()),
        n => Ok(n),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(HarnessError::Config {
                line,
                msg: "expected key = value".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(HarnessError::Config {
                    line,
                    msg: format!("duplicate key {key:?}"),
                });
            }
            cfg.set(key, value).map_err(|e| match e {
                SetError::Unknown => HarnessError::UnknownKey {
                    line,
                    key: key.to_string(),
                },
                SetError::Value(msg) => HarnessError::Config {
                    line,
                    msg: format!("{key}: {msg}"),
                },
            })?;
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), SetError> {
        match key {
            "experiment" => self.experiment = Some(v.parse()?),
            "seed" => self.seed = parse_num(v)?,
            "trials" => self.trials = Some(positive(v)?),
            "schemes" => self.schemes = parse_schemes(v)?,
            "amplitude" => self.amplitude = parse_finite(v)?,
            "es_n0_db" => self.es_n0_db = Some(parse_grid(v)?),
            "i_m" => self.i_m = Some(parse_im_grid(v)?),
            "i_p" => self.i_p = Some(parse_ip_grid(v)?),
            "cfo" => self.cfo = parse_finite(v)?,
            "phase_offset" => self.phase_offset = parse_finite(v)?,
            "noise_reference" => {
                self.nominal_noise = match v {
                    "nominal" => true,
                    "measured" => false,
                    _ => return Err(SetError::Value(format!("expected nominal or measured, got {v:?}"))),
                }
            }
            "receiver" => {
                self.receiver = match v {
                    "full" => ReceiverMode::Full,
                    "coherent" => ReceiverMode::Coherent,
                    _ => return Err(SetError::Value(format!("expected full or coherent, got {v:?}"))),
                }
            }
            "header_symbols" => self.header_symbols = parse_num(v)?,
            "data_bits" => self.data_bits = positive(v)?,
            "lead_in" => self.lead_in = parse_num(v)?,
            "pll_bandwidth" => self.pll_bandwidth = parse_finite(v)?,
            "detect_threshold" => self.detect_threshold = parse_finite(v)?,
            "search_window" => {
                self.search_window = match v {
                    "none" => None,
                    _ => Some(parse_num(v)?),
                }
            }
            "correct_cfo" => self.correct_cfo = parse_bool(v)?,
            "cfo_lock_ratio" => self.cfo_lock_ratio = parse_finite(v)?,
            "tracking" => {
                self.tracking = match v {
                    "key_aided" => Tracking::KeyAided,
                    "effective_order" => Tracking::EffectiveOrder,
                    _ => {
                        return Err(SetError::Value(format!(
                            "expected key_aided or effective_order, got {v:?}"
                        )))
                    }
                }
            }
            "dump_symbols" => self.dump_symbols = positive(v)?,
            "blocks_per_class" => self.blocks_per_class = positive(v)?,
            "block_len" => self.block_len = positive(v)?,
            "snr_grid" => self.snr_grid = parse_grid(v)?,
            "model" => self.model = Some(PathBuf::from(v)),
            "dataset" => self.dataset = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            _ => return Err(SetError::Unknown),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        if !(self.amplitude > 0.0) {
            return bad(format!("amplitude must be positive, got {}", self.amplitude));
        }
        if !(self.cfo.abs() < 0.5) {
            return bad(format!("|cfo| must be below 0.5, got {}", self.cfo));
        }
        if self.es_n0_db.iter().flatten().any(|&x| x == f64::NEG_INFINITY) {
            return bad("es_n0_db must not be -inf".into());
        }
        self.frame_spec().validate()?;
        self.dataset_spec().validate()?;
        self.sync_config(ModScheme::Qpsk, 0)?;
        Ok(())
    }

    pub fn frame_spec(&self) -> FrameSpec {
        FrameSpec {
            header_symbols: self.header_symbols,
            data_bits: self.data_bits,
            ..FrameSpec::default()
        }
    }

    pub fn sync_config(&self, scheme: ModScheme, i_p: u32) -> Result<SyncConfig> {
        let mut s = SyncConfig::for_link(scheme, i_p)?;
        s.pll_loop_bandwidth = self.pll_bandwidth;
        s.detect_threshold = self.detect_threshold;
        s.search_window = self.search_window;
        s.correct_cfo = self.correct_cfo;
        s.cfo_lock_ratio = self.cfo_lock_ratio;
        s.tracking = self.tracking;
        s.validate()?;
        Ok(s)
    }

    pub fn noise_reference(&self) -> NoiseReference {
        if self.nominal_noise {
            NoiseReference::Nominal(self.amplitude * self.amplitude)
        } else {
            NoiseReference::Measured
        }
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            blocks_per_class: self.blocks_per_class,
            block_len: self.block_len,
            snr_grid: self.snr_grid.clone(),
            seed: self.seed,
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.txt"))
    }

    pub fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    /// Every setting, one `key=value` per line in a fixed order, with
    /// defaults filled in. Grids that default per experiment print as
    /// `default`.
    pub fn canonical(&self) -> String {
        fn list<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        fn opt<T: fmt::Display>(v: &Option<Vec<T>>) -> String {
            v.as_deref().map_or("default".into(), list)
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k}={v}").unwrap();
        kv("experiment", self.experiment.map_or("default".into(), |e| e.name().into()));
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.map_or("default".into(), |t| t.to_string()));
        kv("schemes", list(&self.schemes));
        kv("amplitude", self.amplitude.to_string());
        kv("es_n0_db", opt(&self.es_n0_db));
        kv("i_m", opt(&self.i_m));
        kv("i_p", opt(&self.i_p));
        kv("cfo", self.cfo.to_string());
        kv("phase_offset", self.phase_offset.to_string());
        kv("noise_reference", if self.nominal_noise { "nominal" } else { "measured" }.into());
        kv("receiver", match self.receiver {
            ReceiverMode::Full => "full",
            ReceiverMode::Coherent => "coherent",
        }
        .into());
        kv("header_symbols", self.header_symbols.to_string());
        kv("data_bits", self.data_bits.to_string());
        kv("lead_in", self.lead_in.to_string());
        kv("pll_bandwidth", self.pll_bandwidth.to_string());
        kv("detect_threshold", self.detect_threshold.to_string());
        kv("search_window", self.search_window.map_or("none".into(), |w| w.to_string()));
        kv("correct_cfo", self.correct_cfo.to_string());
        kv("cfo_lock_ratio", self.cfo_lock_ratio.to_string());
        kv(
            "tracking",
            match self.tracking {
                Tracking::KeyAided => "key_aided",
                Tracking::EffectiveOrder => "effective_order",
            }
            .into(),
        );
        kv("dump_symbols", self.dump_symbols.to_string());
        kv("blocks_per_class", self.blocks_per_class.to_string());
        kv("block_len", self.block_len.to_string());
        kv("snr_grid", list(&self.snr_grid));
        kv("model", self.model.as_ref().map_or("default".into(), |p| p.display().to_string()));
        kv("dataset", self.dataset.as_ref().map_or("none".into(), |p| p.display().to_string()));
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded. The output
    /// directory is not part of the hash.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut h, b| {
                write!(h, "{b:02x}").unwrap();
                h
            })
    }
}

enum SetError {
    Unknown,
    Value(String),
}

impl From<String> for SetError {
    fn from(s: String) -> Self {
        SetError::Value(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn parses_every_key() {
        let text = "\
experiment = ber_vs_im
seed = 99
trials = 12
schemes = qpsk, 8PSK
amplitude = 2
es_n0_db = 0:2:10   # inclusive
i_m = 0.1, 0.5, 1
i_p = 0:1:4
cfo = 0.001
phase_offset = 0.5
noise_reference = measured
receiver = coherent
header_symbols = 16
data_bits = 2000
lead_in = 10
pll_bandwidth = 0.02
detect_threshold = 0.6
search_window = 100
correct_cfo = false
cfo_lock_ratio = 30
tracking = effective_order
dump_symbols = 1000
blocks_per_class = 50
block_len = 2048
snr_grid = 10, 20
model = m.txt
dataset = ds
out = results
";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.experiment, Some(ExperimentKind::BerVsIm));
        assert_eq!(c.schemes, vec![ModScheme::Qpsk, ModScheme::Psk8]);
        assert_eq!(c.es_n0_db.as_deref(), Some(&[0.0, 2.0, 4.0, 6.0, 8.0, 10.0][..]));
        assert_eq!(c.i_p.as_deref(), Some(&[0, 1, 2, 3, 4][..]));
        assert_eq!(c.search_window, Some(100));
        assert!(!c.nominal_noise && !c.correct_cfo);
        assert_eq!(c.tracking, Tracking::EffectiveOrder);
        assert_eq!(c.receiver, ReceiverMode::Coherent);
        assert_eq!(c.model_path(), PathBuf::from("m.txt"));
        assert_eq!(c.out, PathBuf::from("results"));
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(
            ExperimentConfig::parse("seed = 1\ncolour = red\n"),
            Err(HarnessError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("seed = 1\nseed = 2\n"),
            Err(HarnessError::Config { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "seed = -1",
            "trials = 0",
            "schemes = QPSK, 7PSK",
            "i_m = 0, 0.5",
            "i_m = 1.5",
            "i_p = 1.5",
            "i_p = 17",
            "es_n0_db = 0:-1:10",
            "es_n0_db = 0:0:10",
            "es_n0_db = -inf",
            "cfo = 0.5",
            "amplitude = 0",
            "header_symbols = 2",
            "block_len = 100",
            "pll_bandwidth = 0",
            "noise_reference = loud",
            "experiment = plot",
            "seed",
        ] {
            assert!(ExperimentConfig::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("0:0.1:0.3").unwrap().len(), 4);
        assert_eq!(parse_grid("10:-2:6").unwrap(), vec![10.0, 8.0, 6.0]);
        assert_eq!(parse_grid("inf").unwrap(), vec![f64::INFINITY]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("0:1e-300:1e300").is_err());
        assert!(parse_grid("0:1:1e30").is_err());
    }

    #[test]
    fn hash_tracks_content_not_layout() {
        let a = ExperimentConfig::parse("seed = 3\ni_m = 0.5").unwrap();
        let b = ExperimentConfig::parse("# same\ni_m=0.5\n\nseed=3\n").unwrap();
        let c = ExperimentConfig::parse("seed = 4\ni_m = 0.5").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
        let moved = ExperimentConfig {
            out: PathBuf::from("elsewhere"),
            ..a.clone()
        };
        assert_eq!(a.hash(), moved.hash());
    }
}
