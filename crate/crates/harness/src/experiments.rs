//! Experiment runners. Each returns its table and, when asked, writes it
//! under the configured output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ringsig::channel::{apply_channel, db_to_linear, ChannelConfig};
use ringsig::classifier::dataset::{class_file, Manifest, MANIFEST_FILE};
use ringsig::classifier::pmi::{pmi_csv_header, pmi_csv_row, pmi_trial, trial_seed, DEFAULT_PMI_ES_N0_DB};
use ringsig::classifier::{train, ClassifierModel, Example, PmiPoint, PmiReport};
use ringsig::iqfile::{decode_iq, encode_iq, write_dump, IqMeta, BYTES_PER_SAMPLE};
use ringsig::modem::{modulate, ModConfig};
use ringsig::rng::derive_seed;
use ringsig::shaping::{apply_shaping, mpsk_ber, theoretical_ber_ring, BerMode, FactorStream, ShapingConfig};
use ringsig::ModScheme;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::link::{run_trial, LinkPoint, Outcome};

pub const DEFAULT_BER_FRAMES: usize = 100;
pub const DEFAULT_FACTOR_FRAMES: usize = 20;
pub const DEFAULT_PMI_TRIALS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Parses cell `(row, name)` as a number.
    pub fn value(&self, row: usize, name: &str) -> f64 {
        let col = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows[row][col].parse().expect("numeric cell")
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut out = provenance_line(cfg);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, cfg: &ExperimentConfig, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&cfg.out)?;
        let path = cfg.out.join(name);
        fs::write(&path, self.to_csv(cfg))?;
        Ok(path)
    }
}

/// `# config_hash=<sha256> seed=<u64>`, newline terminated.
pub fn provenance_line(cfg: &ExperimentConfig) -> String {
    format!("# config_hash={} seed={}\n", cfg.hash(), cfg.seed)
}

/// Runs `trials` frames per point in parallel and sums them in trial order.
fn sweep(
    cfg: &ExperimentConfig,
    points: &[LinkPoint],
    trials: usize,
    with_attacker: bool,
) -> Result<Vec<(Outcome, Outcome)>> {
    points
        .iter()
        .enumerate()
        .map(|(i, &point)| {
            let results: Vec<_> = (0..trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, point, derive_seed(cfg.seed, &[i as u64, t as u64]), with_attacker))
                .collect::<Result<_>>()?;
            let mut legit = Outcome::default();
            let mut attacker = Outcome::default();
            for r in results {
                legit += r.legit;
                if let Some(a) = r.attacker {
                    attacker += a;
                }
            }
            Ok((legit, attacker))
        })
        .collect()
}

fn grid_points(cfg: &ExperimentConfig, es: &[f64], im: &[f64], ip: &[u32]) -> Vec<LinkPoint> {
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        for &es_n0_db in es {
            for &i_m in im {
                for &i_p in ip {
                    out.push(LinkPoint {
                        scheme,
                        es_n0_db,
                        i_m,
                        i_p,
                    });
                }
            }
        }
    }
    out
}

fn check_psk(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.schemes.iter().find(|s| !s.is_psk()) {
        Some(&s) => Err(ringsig::Error::NotPsk(s).into()),
        None => Ok(()),
    }
}

fn ratio(a: f64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a / b as f64
    }
}

fn ring_theory(es_n0_db: f64, i_m: f64) -> Result<(f64, f64)> {
    let x = db_to_linear(es_n0_db);
    if x.is_infinite() {
        return Ok((0.0, 0.0));
    }
    Ok((
        theoretical_ber_ring(x, i_m, BerMode::Literal)?,
        theoretical_ber_ring(x, i_m, BerMode::Averaged)?,
    ))
}

/// Measured BER against closed-form MPSK over schemes x `Es/N0`
/// (x `I_m` x `I_p` when those grids have more than one value).
pub fn run_ber_curve(cfg: &ExperimentConfig) -> Result<Table> {
    check_psk(cfg)?;
    let es = cfg.es_n0_db.clone().unwrap_or_else(|| (0..=10).map(f64::from).collect());
    let im = cfg.i_m.clone().unwrap_or_else(|| vec![1.0]);
    let ip = cfg.i_p.clone().unwrap_or_else(|| vec![0]);
    let points = grid_points(cfg, &es, &im, &ip);
    let frames = cfg.trials_or(DEFAULT_BER_FRAMES);
    let results = sweep(cfg, &points, frames, false)?;

    let mut t = Table::new(&[
        "scheme",
        "es_n0_db",
        "ber_measured",
        "ber_theory",
        "bits",
        "errors",
        "i_m",
        "i_p",
        "ser_measured",
        "ser_ring_literal",
        "ser_ring_averaged",
        "frames",
        "frames_lost",
    ]);
    for (p, (o, _)) in points.iter().zip(results) {
        let (lit, avg) = ring_theory(p.es_n0_db, p.i_m)?;
        t.rows.push(vec![
            p.scheme.to_string(),
            p.es_n0_db.to_string(),
            ratio(o.bit_errors, o.bits).to_string(),
            mpsk_ber(p.scheme.order(), db_to_linear(p.es_n0_db)).to_string(),
            o.bits.to_string(),
            o.bit_errors.to_string(),
            p.i_m.to_string(),
            p.i_p.to_string(),
            ratio(o.symbol_errors, o.symbols).to_string(),
            lit.to_string(),
            avg.to_string(),
            frames.to_string(),
            o.frames_lost.to_string(),
        ]);
    }
    Ok(t)
}

/// BER over `Es/N0` x `I_m` x `I_p` for the key holder and for a receiver
/// with a wrong shaping seed.
pub fn run_ber_vs_factors(cfg: &ExperimentConfig) -> Result<Table> {
    check_psk(cfg)?;
    let es = cfg.es_n0_db.clone().unwrap_or_else(|| vec![8.0]);
    let im = cfg
        .i_m
        .clone()
        .unwrap_or_else(|| (1..=10).map(|k| k as f64 / 10.0).collect());
    let ip = cfg.i_p.clone().unwrap_or_else(|| vec![0, 1, 2, 3, 4]);
    let points = grid_points(cfg, &es, &im, &ip);
    let frames = cfg.trials_or(DEFAULT_FACTOR_FRAMES);
    let results = sweep(cfg, &points, frames, true)?;

    let mut t = Table::new(&[
        "scheme",
        "es_n0_db",
        "i_m",
        "i_p",
        "ber_measured",
        "ber_attacker",
        "ser_measured",
        "ser_ring_literal",
        "ser_ring_averaged",
        "bits",
        "errors",
        "attacker_errors",
        "frames",
        "frames_lost",
    ]);
    for (p, (o, a)) in points.iter().zip(results) {
        let (lit, avg) = ring_theory(p.es_n0_db, p.i_m)?;
        t.rows.push(vec![
            p.scheme.to_string(),
            p.es_n0_db.to_string(),
            p.i_m.to_string(),
            p.i_p.to_string(),
            ratio(o.bit_errors, o.bits).to_string(),
            ratio(a.bit_errors, a.bits).to_string(),
            ratio(o.symbol_errors, o.symbols).to_string(),
            lit.to_string(),
            avg.to_string(),
            o.bits.to_string(),
            o.bit_errors.to_string(),
            a.bit_errors.to_string(),
            frames.to_string(),
            o.frames_lost.to_string(),
        ]);
    }
    Ok(t)
}

pub const DUMP_KINDS: [&str; 4] = ["unshaped", "phase_only", "magnitude_only", "shaped"];

/// Writes `<out>/<kind>.iq` plus sidecars for the four shaping variants of
/// the first scheme, `I_m` and `I_p` in the config. Noise is added when the
/// first `es_n0_db` value is finite.
pub fn dump_constellation(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    check_psk(cfg)?;
    let scheme = cfg.schemes[0];
    let i_m = cfg.i_m.as_ref().map_or(0.3, |v| v[0]);
    let i_p = cfg.i_p.as_ref().map_or(4, |v| v[0]);
    let es_n0_db = cfg.es_n0_db.as_ref().map_or(f64::INFINITY, |v| v[0]);
    let n = cfg.dump_symbols;

    let mod_cfg = ModConfig::new(scheme, cfg.amplitude)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0]));
    let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..scheme.order())).collect();
    let symbols = modulate(&indices, &mod_cfg)?;
    let key = derive_seed(cfg.seed, &[1]);

    fs::create_dir_all(&cfg.out)?;
    let mut paths = Vec::new();
    for (k, kind) in DUMP_KINDS.iter().enumerate() {
        let (ip, im) = match *kind {
            "unshaped" => (0, 1.0),
            "phase_only" => (i_p, 1.0),
            "magnitude_only" => (0, i_m),
            _ => (i_p, i_m),
        };
        let shaping = ShapingConfig::new(key, ip, im)?;
        let shaped = apply_shaping(&symbols, &FactorStream::generate(&shaping, n))?;
        let channel = ChannelConfig {
            noise_reference: cfg.noise_reference(),
            ..ChannelConfig::awgn(es_n0_db, derive_seed(cfg.seed, &[2, k as u64]))
        };
        let samples = apply_channel(&shaped, &channel)?;
        let meta = IqMeta {
            sample_count: n,
            scheme,
            i_m: im,
            i_p: ip,
            es_n0_db,
            seed: cfg.seed,
        };
        let path = cfg.out.join(format!("{kind}.iq"));
        write_dump(&path, &samples, &meta)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn load_model(cfg: &ExperimentConfig) -> Result<ClassifierModel> {
    let path = cfg.model_path();
    if !path.exists() {
        return Err(HarnessError::ModelMissing(path));
    }
    Ok(ClassifierModel::load(path)?)
}

pub fn pmi_points(cfg: &ExperimentConfig) -> Vec<PmiPoint> {
    let es = cfg.es_n0_db.clone().unwrap_or_else(|| vec![DEFAULT_PMI_ES_N0_DB]);
    let ip = cfg.i_p.clone().unwrap_or_else(|| vec![1, 4]);
    let im = cfg
        .i_m
        .clone()
        .unwrap_or_else(|| vec![1.0, 0.8, 0.6, 0.4, 0.3, 0.2, 0.1]);
    let mut out = Vec::new();
    for &es_n0_db in &es {
        for &i_p in &ip {
            for &i_m in &im {
                out.push(PmiPoint { i_m, i_p, es_n0_db });
            }
        }
    }
    out
}

/// PMI of shaped QPSK at every point, trials classified in parallel.
pub fn run_pmi_sweep_with(cfg: &ExperimentConfig, model: &ClassifierModel) -> Result<Vec<PmiReport>> {
    let trials = cfg.trials_or(DEFAULT_PMI_TRIALS);
    pmi_points(cfg)
        .iter()
        .enumerate()
        .map(|(i, &point)| {
            let labels: Vec<ModScheme> = (0..trials)
                .into_par_iter()
                .map(|t| pmi_trial(point, model, trial_seed(cfg.seed, i, t)))
                .collect::<ringsig::Result<_>>()?;
            Ok(PmiReport::from_predictions(point, &labels)?)
        })
        .collect()
}

pub fn run_pmi_sweep(cfg: &ExperimentConfig) -> Result<Vec<PmiReport>> {
    run_pmi_sweep_with(cfg, &load_model(cfg)?)
}

pub fn pmi_csv(cfg: &ExperimentConfig, reports: &[PmiReport]) -> String {
    let mut out = provenance_line(cfg);
    out.push_str(&pmi_csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&pmi_csv_row(r));
        out.push('\n');
    }
    out
}

const DATASET_CHUNK: usize = 256;

/// Writes one I/Q file per class and the manifest into the output
/// directory.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<Manifest> {
    let spec = cfg.dataset_spec();
    spec.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let plan = spec.plan();
    for scheme in ModScheme::ALL {
        let blocks: Vec<_> = plan.iter().filter(|b| b.scheme == scheme).collect();
        let mut w = BufWriter::new(File::create(cfg.out.join(class_file(scheme)))?);
        for chunk in blocks.chunks(DATASET_CHUNK) {
            let encoded: Vec<Vec<u8>> = chunk
                .par_iter()
                .map(|b| Ok(encode_iq(&b.samples()?)))
                .collect::<ringsig::Result<_>>()?;
            for e in encoded {
                w.write_all(&e)?;
            }
        }
        w.flush()?;
    }
    let manifest = spec.manifest();
    let mut w = BufWriter::new(File::create(cfg.out.join(MANIFEST_FILE))?);
    manifest.write(&mut w)?;
    w.flush()?;
    Ok(manifest)
}

/// Features for every manifest entry, read from the dataset directory.
pub fn examples_from_dataset(dir: &Path) -> Result<Vec<Example>> {
    let manifest = Manifest::read(File::open(dir.join(MANIFEST_FILE))?)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for e in &manifest.entries {
        if !files.iter().any(|(f, _)| *f == e.file) {
            files.push((e.file.clone(), fs::read(dir.join(&e.file))?));
        }
    }
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let bytes = &files.iter().find(|(f, _)| *f == e.file).unwrap().1;
            let start = e.offset as usize * BYTES_PER_SAMPLE;
            let end = start + e.sample_count * BYTES_PER_SAMPLE;
            let chunk = bytes.get(start..end).ok_or_else(|| {
                ringsig::Error::Format {
                    what: "dataset",
                    detail: format!("{} is shorter than its manifest entry", e.file),
                }
            })?;
            Ok(Example::from_block(e.scheme, e.es_n0_db, e.split, &decode_iq(chunk)?)?)
        })
        .collect()
}

/// Regenerates the configured dataset in memory and reduces it to features.
pub fn examples_from_spec(cfg: &ExperimentConfig) -> Result<Vec<Example>> {
    let spec = cfg.dataset_spec();
    spec.validate()?;
    spec.plan()
        .par_iter()
        .map(|b| Ok(Example::from_block(b.scheme, b.es_n0_db, b.split, &b.samples()?)?))
        .collect()
}

/// Trains on `dataset` if configured, otherwise on the regenerated dataset.
/// Saves the model and the held-out confusion matrix.
pub fn train_classifier(cfg: &ExperimentConfig) -> Result<ClassifierModel> {
    let examples = match &cfg.dataset {
        Some(dir) => examples_from_dataset(dir)?,
        None => examples_from_spec(cfg)?,
    };
    let model = train(&examples)?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.model_path();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    model.save(&path)?;
    if let Some(cm) = &model.confusion {
        fs::write(
            cfg.out.join("confusion.csv"),
            format!("{}{}", provenance_line(cfg), cm.to_csv()),
        )?;
    }
    Ok(model)
}
