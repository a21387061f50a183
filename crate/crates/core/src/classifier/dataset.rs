//! Synthetic labelled blocks and the dataset manifest.
//!
//! A dataset directory holds one I/Q file per class (`BPSK.iq`, ...) with
//! the blocks concatenated in index order, plus `manifest.csv`:
//!
//! ```text
//! # ringsig dataset v1
//! file,offset,sample_count,scheme,es_n0_db,seed,split
//! BPSK.iq,0,1024,BPSK,17,9182736450123,train
//! ```
//!
//! `offset` and `sample_count` are in samples, not bytes.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::Split;
use crate::channel::{apply_channel, ChannelConfig};
use crate::error::{Error, Result};
use crate::modem::{modulate, IqSample, ModConfig, ModScheme};
use crate::rng::derive_seed;

pub const DEFAULT_BLOCKS_PER_CLASS: usize = 20_000;
pub const DEFAULT_BLOCK_LEN: usize = 1024;
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MANIFEST_HEADER: [&str; 7] = [
    "file",
    "offset",
    "sample_count",
    "scheme",
    "es_n0_db",
    "seed",
    "split",
];

/// Integer `Es/N0` grid from 0 to 30 dB.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=30).map(f64::from).collect()
}

/// Random symbols of `scheme` at unit power, a uniform random carrier
/// phase and AWGN at `es_n0_db`.
pub fn synth_block(scheme: ModScheme, es_n0_db: f64, seed: u64, len: usize) -> Result<Vec<IqSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let order = scheme.order();
    let indices: Vec<usize> = (0..len).map(|_| rng.random_range(0..order)).collect();
    let clean = modulate(&indices, &ModConfig::new(scheme, 1.0)?)?;
    let channel = ChannelConfig {
        phase_offset: rng.random_range(0.0..TAU),
        ..ChannelConfig::awgn(es_n0_db, derive_seed(seed, &[1]))
    };
    apply_channel(&clean, &channel)
}

/// Split by block index: 8 of every 10 train, then one validation and one
/// test.
pub fn split_of(index: usize) -> Split {
    match index % 10 {
        8 => Split::Validation,
        9 => Split::Test,
        _ => Split::Train,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub blocks_per_class: usize,
    pub block_len: usize,
    pub snr_grid: Vec<f64>,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(seed: u64) -> Self {
        DatasetSpec {
            blocks_per_class: DEFAULT_BLOCKS_PER_CLASS,
            block_len: DEFAULT_BLOCK_LEN,
            snr_grid: default_snr_grid(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks_per_class == 0 {
            return Err(Error::Domain("blocks_per_class must be positive".into()));
        }
        if self.block_len < super::features::MIN_BLOCK_LEN {
            return Err(Error::TooFewSamples {
                needed: super::features::MIN_BLOCK_LEN,
                got: self.block_len,
            });
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| s.is_nan()) {
            return Err(Error::Domain("SNR grid must be non-empty and not NaN".into()));
        }
        Ok(())
    }

    /// Every block of every class, classes in [`ModScheme::ALL`] order.
    pub fn plan(&self) -> Vec<BlockSpec> {
        let mut out = Vec::with_capacity(self.blocks_per_class * ModScheme::ALL.len());
        for (c, &scheme) in ModScheme::ALL.iter().enumerate() {
            for index in 0..self.blocks_per_class {
                let seed = derive_seed(self.seed, &[c as u64, index as u64]);
                let pick = derive_seed(seed, &[u64::MAX]) % self.snr_grid.len() as u64;
                out.push(BlockSpec {
                    scheme,
                    index,
                    es_n0_db: self.snr_grid[pick as usize],
                    seed,
                    split: split_of(index),
                    len: self.block_len,
                });
            }
        }
        out
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            entries: self
                .plan()
                .iter()
                .map(|b| ManifestEntry {
                    file: class_file(b.scheme),
                    offset: (b.index * b.len) as u64,
                    sample_count: b.len,
                    scheme: b.scheme,
                    es_n0_db: b.es_n0_db,
                    seed: b.seed,
                    split: b.split,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec {
    pub scheme: ModScheme,
    pub index: usize,
    pub es_n0_db: f64,
    pub seed: u64,
    pub split: Split,
    pub len: usize,
}

impl BlockSpec {
    pub fn samples(&self) -> Result<Vec<IqSample>> {
        synth_block(self.scheme, self.es_n0_db, self.seed, self.len)
    }
}

pub fn class_file(scheme: ModScheme) -> String {
    format!("{scheme}.iq")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub file: String,
    pub offset: u64,
    pub sample_count: usize,
    pub scheme: ModScheme,
    pub es_n0_db: f64,
    pub seed: u64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

fn manifest_err(detail: impl Into<String>) -> Error {
    Error::format("dataset manifest", detail)
}

impl Manifest {
    pub fn split_counts(&self, scheme: ModScheme) -> [usize; 3] {
        let mut counts = [0; 3];
        for e in self.entries.iter().filter(|e| e.scheme == scheme) {
            counts[match e.split {
                Split::Train => 0,
                Split::Validation => 1,
                Split::Test => 2,
            }] += 1;
        }
        counts
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = w;
        writeln!(w, "# ringsig dataset v1")?;
        let mut csv = csv::Writer::from_writer(w);
        let err = |e: csv::Error| manifest_err(e.to_string());
        csv.write_record(MANIFEST_HEADER).map_err(err)?;
        for e in &self.entries {
            csv.write_record([
                e.file.clone(),
                e.offset.to_string(),
                e.sample_count.to_string(),
                e.scheme.to_string(),
                e.es_n0_db.to_string(),
                e.seed.to_string(),
                e.split.to_string(),
            ])
            .map_err(err)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("manifest is ASCII")
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(r);
        let headers = reader
            .headers()
            .map_err(|e| manifest_err(e.to_string()))?
            .clone();
        if headers.iter().ne(MANIFEST_HEADER) {
            return Err(manifest_err(format!("unexpected header {headers:?}")));
        }
        let mut entries = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| manifest_err(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let bad = |i: usize| manifest_err(format!("row {}: bad {}", row + 1, MANIFEST_HEADER[i]));
            let file = field(0);
            if file.is_empty() || file.contains(['/', '\\']) || file.starts_with('.') {
                return Err(bad(0));
            }
            let entry = ManifestEntry {
                file: file.to_string(),
                offset: field(1).parse().map_err(|_| bad(1))?,
                sample_count: field(2).parse().map_err(|_| bad(2))?,
                scheme: field(3).parse().map_err(|_| bad(3))?,
                es_n0_db: field(4).parse().map_err(|_| bad(4))?,
                seed: field(5).parse().map_err(|_| bad(5))?,
                split: field(6).parse().map_err(|_| bad(6))?,
            };
            if entry.es_n0_db.is_nan() {
                return Err(bad(4));
            }
            if entry.sample_count == 0 {
                return Err(bad(2));
            }
            entries.push(entry);
        }
        Ok(Manifest { entries })
    }
}

impl FromStr for Manifest {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Manifest::read(s.as_bytes())
    }
}
