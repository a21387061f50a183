//! Per-class Gaussian mixtures over the feature space.
//!
//! Each class is modelled by one full-covariance Gaussian per training SNR
//! bin. A block is assigned to the class with the largest mixture
//! likelihood.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::features::{extract_features, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::modem::{IqSample, ModScheme};

pub const NUM_CLASSES: usize = ModScheme::ALL.len();

/// First line of a model file.
pub const MODEL_MAGIC: &str = "ringsig-classifier";
pub const MODEL_VERSION: u32 = 1;

/// Minimum training examples behind one mixture component.
pub const MIN_COMPONENT_SIZE: usize = 4 * FEATURE_DIM;

/// Ridge strengths tried on the validation split, relative to the pooled
/// per-feature variance.
pub const RIDGE_GRID: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

pub fn class_index(scheme: ModScheme) -> usize {
    ModScheme::ALL.iter().position(|&s| s == scheme).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(Error::format("split", format!("unknown split {s:?}"))),
        }
    }
}

/// One labelled block, already reduced to features.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub scheme: ModScheme,
    pub es_n0_db: f64,
    pub split: Split,
    pub features: [f64; FEATURE_DIM],
}

impl Example {
    pub fn from_block(
        scheme: ModScheme,
        es_n0_db: f64,
        split: Split,
        samples: &[IqSample],
    ) -> Result<Self> {
        Ok(Example {
            scheme,
            es_n0_db,
            split,
            features: extract_features(samples)?.to_array(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Component {
    pub es_n0_db: f64,
    pub count: usize,
    pub mean: [f64; FEATURE_DIM],
    /// Row-major, ridge already applied.
    pub cov: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    half_log_det: f64,
}

impl Component {
    fn new(es_n0_db: f64, count: usize, mean: [f64; FEATURE_DIM], cov: Vec<f64>) -> Result<Self> {
        let m = DMatrix::from_row_slice(FEATURE_DIM, FEATURE_DIM, &cov);
        let chol = Cholesky::new(m).ok_or_else(|| {
            Error::Domain(format!(
                "covariance at {es_n0_db} dB is not positive definite"
            ))
        })?;
        let half_log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        if !half_log_det.is_finite() {
            return Err(Error::Domain(format!(
                "covariance at {es_n0_db} dB is numerically singular"
            )));
        }
        Ok(Component {
            es_n0_db,
            count,
            mean,
            cov,
            chol,
            half_log_det,
        })
    }

    /// Log density up to the shared `-d/2 ln 2π` term.
    pub fn log_density(&self, x: &[f64; FEATURE_DIM]) -> f64 {
        let d = DVector::from_iterator(FEATURE_DIM, x.iter().zip(&self.mean).map(|(a, b)| a - b));
        let z = self.chol.l().solve_lower_triangular(&d).unwrap_or(d);
        -0.5 * z.norm_squared() - self.half_log_det
    }
}

#[derive(Debug, Clone)]
pub struct ClassModel {
    pub scheme: ModScheme,
    pub components: Vec<Component>,
}

impl ClassModel {
    pub fn log_likelihood(&self, x: &[f64; FEATURE_DIM]) -> f64 {
        let logs: Vec<f64> = self.components.iter().map(|c| c.log_density(x)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return max;
        }
        let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        max + (sum / logs.len() as f64).ln()
    }
}

/// Rows are true classes, columns predicted classes, both in
/// [`ModScheme::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: ModScheme, predicted: ModScheme) {
        self.counts[class_index(truth)][class_index(predicted)] += 1;
    }

    pub fn row_total(&self, truth: ModScheme) -> u64 {
        self.counts[class_index(truth)].iter().sum()
    }

    pub fn count(&self, truth: ModScheme, predicted: ModScheme) -> u64 {
        self.counts[class_index(truth)][class_index(predicted)]
    }

    pub fn accuracy(&self, scheme: ModScheme) -> f64 {
        let total = self.row_total(scheme);
        if total == 0 {
            return 0.0;
        }
        self.count(scheme, scheme) as f64 / total as f64
    }

    pub fn overall_accuracy(&self) -> f64 {
        let total: u64 = self.counts.iter().flatten().sum();
        let hits: u64 = (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum();
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }

    /// Fraction of `a` and `b` blocks labelled as the other one.
    pub fn mutual_confusion(&self, a: ModScheme, b: ModScheme) -> f64 {
        let total = self.row_total(a) + self.row_total(b);
        if total == 0 {
            return 0.0;
        }
        (self.count(a, b) + self.count(b, a)) as f64 / total as f64
    }

    /// CSV with a `true_class` column followed by one column per predicted
    /// class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_class");
        for s in ModScheme::ALL {
            write!(out, ",{s}").unwrap();
        }
        out.push('\n');
        for (i, s) in ModScheme::ALL.iter().enumerate() {
            out.push_str(s.name());
            for c in self.counts[i] {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub scheme: ModScheme,
    /// Mixture log-likelihood per class, in [`ModScheme::ALL`] order.
    pub scores: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    pub classes: Vec<ClassModel>,
    pub ridge: f64,
    /// Held-out test confusion, when a test split was present.
    pub confusion: Option<ConfusionMatrix>,
}

impl ClassifierModel {
    pub fn classify_features(&self, x: &[f64; FEATURE_DIM]) -> Classification {
        let mut scores = [f64::NEG_INFINITY; NUM_CLASSES];
        for (score, class) in scores.iter_mut().zip(&self.classes) {
            *score = class.log_likelihood(x);
        }
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        Classification {
            scheme: ModScheme::ALL[best],
            scores,
        }
    }

    pub fn classify(&self, samples: &[IqSample]) -> Result<Classification> {
        Ok(self.classify_features(&extract_features(samples)?.to_array()))
    }

    pub fn evaluate<'a>(&self, examples: impl IntoIterator<Item = &'a Example>) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::default();
        for ex in examples {
            cm.record(ex.scheme, self.classify_features(&ex.features).scheme);
        }
        cm
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }
}

pub fn classify(samples: &[IqSample], model: &ClassifierModel) -> Result<Classification> {
    model.classify(samples)
}

struct Moments {
    es_n0_db: f64,
    count: usize,
    mean: [f64; FEATURE_DIM],
    scatter: Vec<f64>,
}

fn moments(group: &[&Example]) -> Moments {
    let n = group.len() as f64;
    let mut mean = [0.0; FEATURE_DIM];
    for ex in group {
        for (m, x) in mean.iter_mut().zip(&ex.features) {
            *m += x / n;
        }
    }
    let mut scatter = vec![0.0; FEATURE_DIM * FEATURE_DIM];
    for ex in group {
        for i in 0..FEATURE_DIM {
            let di = ex.features[i] - mean[i];
            for j in 0..FEATURE_DIM {
                scatter[i * FEATURE_DIM + j] += di * (ex.features[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1.0).max(1.0);
    scatter.iter_mut().for_each(|v| *v /= denom);
    Moments {
        es_n0_db: group.iter().map(|e| e.es_n0_db).sum::<f64>() / n,
        count: group.len(),
        mean,
        scatter,
    }
}

/// Splits one class's training examples into consecutive SNR groups of at
/// least [`MIN_COMPONENT_SIZE`] examples, never separating equal SNRs.
fn snr_groups(mut exs: Vec<&Example>) -> Vec<Vec<&Example>> {
    exs.sort_by(|a, b| a.es_n0_db.total_cmp(&b.es_n0_db));
    let mut groups: Vec<Vec<&Example>> = Vec::new();
    let mut current: Vec<&Example> = Vec::new();
    for (i, ex) in exs.iter().enumerate() {
        current.push(ex);
        let boundary = exs
            .get(i + 1)
            .is_none_or(|next| next.es_n0_db != ex.es_n0_db);
        if boundary && current.len() >= MIN_COMPONENT_SIZE {
            groups.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        match groups.last_mut() {
            Some(last) => last.extend(current),
            None => groups.push(current),
        }
    }
    groups
}

fn build(fitted: &[(ModScheme, Vec<Moments>)], pooled_var: &[f64; FEATURE_DIM], ridge: f64) -> Result<ClassifierModel> {
    let mut classes = Vec::with_capacity(NUM_CLASSES);
    for (scheme, groups) in fitted {
        let mut components = Vec::with_capacity(groups.len());
        for g in groups {
            let mut cov = g.scatter.clone();
            for (i, v) in pooled_var.iter().enumerate() {
                cov[i * FEATURE_DIM + i] += ridge * v.max(1e-300);
            }
            components.push(Component::new(g.es_n0_db, g.count, g.mean, cov)?);
        }
        classes.push(ClassModel {
            scheme: *scheme,
            components,
        });
    }
    Ok(ClassifierModel {
        classes,
        ridge,
        confusion: None,
    })
}

/// Fits the mixtures on the training split, picks the ridge strength with
/// the best validation accuracy (or the smallest one without a validation
/// split) and records the test-split confusion matrix.
pub fn train(examples: &[Example]) -> Result<ClassifierModel> {
    let training: Vec<&Example> = examples.iter().filter(|e| e.split == Split::Train).collect();
    for scheme in ModScheme::ALL {
        if training.iter().filter(|e| e.scheme == scheme).count() < 2 {
            return Err(Error::MissingClass(scheme));
        }
    }
    if let Some(bad) = training
        .iter()
        .find(|e| e.features.iter().any(|v| !v.is_finite()) || e.es_n0_db.is_nan())
    {
        return Err(Error::Domain(format!(
            "non-finite training example for {}",
            bad.scheme
        )));
    }

    let all = moments(&training);
    let mut pooled_var = [0.0; FEATURE_DIM];
    for (i, v) in pooled_var.iter_mut().enumerate() {
        *v = all.scatter[i * FEATURE_DIM + i];
    }

    let fitted: Vec<(ModScheme, Vec<Moments>)> = ModScheme::ALL
        .iter()
        .map(|&scheme| {
            let own = training.iter().copied().filter(|e| e.scheme == scheme).collect();
            (scheme, snr_groups(own).iter().map(|g| moments(g)).collect())
        })
        .collect();

    let validation: Vec<&Example> = examples
        .iter()
        .filter(|e| e.split == Split::Validation)
        .collect();
    let mut best: Option<(f64, ClassifierModel)> = None;
    for ridge in RIDGE_GRID {
        let model = build(&fitted, &pooled_var, ridge)?;
        if validation.is_empty() {
            best = Some((0.0, model));
            break;
        }
        let acc = model.evaluate(validation.iter().copied()).overall_accuracy();
        if best.as_ref().is_none_or(|(b, _)| acc > *b) {
            best = Some((acc, model));
        }
    }
    let mut model = best.unwrap().1;

    let test: Vec<&Example> = examples.iter().filter(|e| e.split == Split::Test).collect();
    if !test.is_empty() {
        model.confusion = Some(model.evaluate(test.iter().copied()));
    }
    Ok(model)
}

// Text format:
//
//   ringsig-classifier 1
//   dim 14
//   ridge <f64>
//   classes BPSK QPSK ... (all ten, canonical order)
//   component <scheme> <es_n0_db> <count>
//   mean <14 values>
//   cov <14 values>          (14 rows)
//   ...
//   confusion <scheme> <10 counts>   (optional, 10 rows)

impl fmt::Display for ClassifierModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{MODEL_MAGIC} {MODEL_VERSION}")?;
        writeln!(f, "dim {FEATURE_DIM}")?;
        writeln!(f, "ridge {}", self.ridge)?;
        write!(f, "classes")?;
        for c in &self.classes {
            write!(f, " {}", c.scheme)?;
        }
        writeln!(f)?;
        let row = |f: &mut fmt::Formatter<'_>, tag: &str, vals: &[f64]| -> fmt::Result {
            write!(f, "{tag}")?;
            for v in vals {
                write!(f, " {v:e}")?;
            }
            writeln!(f)
        };
        for class in &self.classes {
            for c in &class.components {
                writeln!(f, "component {} {} {}", class.scheme, c.es_n0_db, c.count)?;
                row(f, "mean", &c.mean)?;
                for r in c.cov.chunks(FEATURE_DIM) {
                    row(f, "cov", r)?;
                }
            }
        }
        if let Some(cm) = &self.confusion {
            for (i, s) in ModScheme::ALL.iter().enumerate() {
                write!(f, "confusion {s}")?;
                for c in cm.counts[i] {
                    write!(f, " {c}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

fn model_err(line: usize, detail: impl fmt::Display) -> Error {
    Error::format("classifier model", format!("line {line}: {detail}"))
}

fn parse_values<T: FromStr>(line: usize, parts: &[&str], n: usize) -> Result<Vec<T>> {
    if parts.len() != n {
        return Err(model_err(line, format!("expected {n} values, got {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| p.parse().map_err(|_| model_err(line, format!("bad number {p:?}"))))
        .collect()
}

impl FromStr for ClassifierModel {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, p)| !p.is_empty())
            .peekable();
        let mut expect = |tag: &str| -> Result<(usize, Vec<&str>)> {
            match lines.next() {
                Some((n, p)) if p[0] == tag => Ok((n, p[1..].to_vec())),
                Some((n, p)) => Err(model_err(n, format!("expected {tag:?}, found {:?}", p[0]))),
                None => Err(model_err(0, format!("unexpected end of file, expected {tag:?}"))),
            }
        };

        let (n, v) = expect(MODEL_MAGIC)?;
        if v != [MODEL_VERSION.to_string().as_str()] {
            return Err(model_err(n, format!("unsupported version {v:?}")));
        }
        let (n, v) = expect("dim")?;
        if parse_values::<usize>(n, &v, 1)?[0] != FEATURE_DIM {
            return Err(model_err(n, format!("feature dimension must be {FEATURE_DIM}")));
        }
        let (n, v) = expect("ridge")?;
        let ridge = parse_values::<f64>(n, &v, 1)?[0];
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(model_err(n, "ridge must be finite and non-negative"));
        }
        let (n, v) = expect("classes")?;
        let names: Vec<String> = ModScheme::ALL.iter().map(|s| s.to_string()).collect();
        if v != names {
            return Err(model_err(n, "class list must name all ten schemes in canonical order"));
        }

        let mut classes: Vec<ClassModel> = ModScheme::ALL
            .iter()
            .map(|&scheme| ClassModel {
                scheme,
                components: Vec::new(),
            })
            .collect();
        let mut confusion: Option<ConfusionMatrix> = None;
        let mut confusion_rows = 0;

        while let Some((n, p)) = lines.next() {
            match p[0] {
                "component" if confusion.is_none() => {
                    if p.len() != 4 {
                        return Err(model_err(n, "component needs scheme, SNR and count"));
                    }
                    let scheme: ModScheme =
                        p[1].parse().map_err(|_| model_err(n, format!("unknown scheme {:?}", p[1])))?;
                    let snr: f64 = p[2].parse().map_err(|_| model_err(n, "bad SNR"))?;
                    let count: usize = p[3].parse().map_err(|_| model_err(n, "bad count"))?;
                    let mut next = |tag: &str| -> Result<Vec<f64>> {
                        match lines.next() {
                            Some((m, q)) if q[0] == tag => {
                                let vals = parse_values::<f64>(m, &q[1..], FEATURE_DIM)?;
                                if vals.iter().any(|v| !v.is_finite()) {
                                    return Err(model_err(m, "non-finite value"));
                                }
                                Ok(vals)
                            }
                            Some((m, _)) => Err(model_err(m, format!("expected {tag:?}"))),
                            None => Err(model_err(n, format!("truncated component, expected {tag:?}"))),
                        }
                    };
                    let mean: [f64; FEATURE_DIM] = next("mean")?.try_into().unwrap();
                    let mut cov = Vec::with_capacity(FEATURE_DIM * FEATURE_DIM);
                    for _ in 0..FEATURE_DIM {
                        cov.extend(next("cov")?);
                    }
                    let component = Component::new(snr, count, mean, cov)
                        .map_err(|e| model_err(n, e))?;
                    classes[class_index(scheme)].components.push(component);
                }
                "confusion" => {
                    let cm = confusion.get_or_insert_with(ConfusionMatrix::default);
                    if confusion_rows == NUM_CLASSES || p.len() != NUM_CLASSES + 2 {
                        return Err(model_err(n, "malformed confusion row"));
                    }
                    if p[1] != ModScheme::ALL[confusion_rows].name() {
                        return Err(model_err(n, "confusion rows out of order"));
                    }
                    let counts = parse_values::<u64>(n, &p[2..], NUM_CLASSES)?;
                    cm.counts[confusion_rows].copy_from_slice(&counts);
                    confusion_rows += 1;
                }
                other => return Err(model_err(n, format!("unexpected {other:?}"))),
            }
        }
        if confusion.is_some() && confusion_rows != NUM_CLASSES {
            return Err(model_err(0, "incomplete confusion matrix"));
        }
        if let Some(c) = classes.iter().find(|c| c.components.is_empty()) {
            return Err(model_err(0, format!("no components for {}", c.scheme)));
        }
        Ok(ClassifierModel {
            classes,
            ridge,
            confusion,
        })
    }
}
