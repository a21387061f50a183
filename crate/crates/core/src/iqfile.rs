//! Raw I/Q files and their metadata sidecars.
//!
//! An I/Q file is a headerless sequence of little-endian `f32` pairs, the
//! in-phase component first. Each file may be accompanied by a `.meta`
//! sidecar of `key=value` lines:
//!
//! ```text
//! sample_count=1024
//! scheme=QPSK
//! i_m=0.3
//! i_p=4
//! es_n0_db=20
//! seed=7
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! required, each may appear once, and unknown keys are rejected.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::modem::{IqSample, ModScheme};

pub const BYTES_PER_SAMPLE: usize = 8;

pub fn encode_iq(samples: &[IqSample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * BYTES_PER_SAMPLE);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

/// Decodes a complete I/Q byte buffer. Rejects trailing partial samples and
/// non-finite components.
pub fn decode_iq(bytes: &[u8]) -> Result<Vec<IqSample>> {
    if !bytes.len().is_multiple_of(BYTES_PER_SAMPLE) {
        return Err(Error::format(
            "I/Q data",
            format!(
                "{} bytes is not a whole number of {BYTES_PER_SAMPLE}-byte samples",
                bytes.len()
            ),
        ));
    }
    bytes
        .chunks_exact(BYTES_PER_SAMPLE)
        .enumerate()
        .map(|(k, c)| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::format(
                    "I/Q data",
                    format!("non-finite value at sample {k}"),
                ));
            }
            Ok(IqSample::new(re as f64, im as f64))
        })
        .collect()
}

pub fn write_iq<W: Write>(mut w: W, samples: &[IqSample]) -> Result<()> {
    w.write_all(&encode_iq(samples))?;
    Ok(())
}

pub fn read_iq<R: Read>(mut r: R) -> Result<Vec<IqSample>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_iq(&buf)
}

pub fn write_iq_file(path: impl AsRef<Path>, samples: &[IqSample]) -> Result<()> {
    fs::write(path, encode_iq(samples))?;
    Ok(())
}

pub fn read_iq_file(path: impl AsRef<Path>) -> Result<Vec<IqSample>> {
    decode_iq(&fs::read(path)?)
}

/// `capture.iq` -> `capture.meta`.
pub fn sidecar_path(iq_path: impl AsRef<Path>) -> PathBuf {
    iq_path.as_ref().with_extension("meta")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqMeta {
    pub sample_count: usize,
    pub scheme: ModScheme,
    pub i_m: f64,
    pub i_p: u32,
    /// `inf` for noiseless dumps.
    pub es_n0_db: f64,
    pub seed: u64,
}

const META_KEYS: [&str; 6] = ["sample_count", "scheme", "i_m", "i_p", "es_n0_db", "seed"];

impl fmt::Display for IqMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sample_count={}", self.sample_count)?;
        writeln!(f, "scheme={}", self.scheme)?;
        writeln!(f, "i_m={}", self.i_m)?;
        writeln!(f, "i_p={}", self.i_p)?;
        writeln!(f, "es_n0_db={}", self.es_n0_db)?;
        writeln!(f, "seed={}", self.seed)
    }
}

fn meta_err(detail: impl Into<String>) -> Error {
    Error::format("metadata sidecar", detail)
}

fn parse_field<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| meta_err(format!("bad value {value:?} for {key}")))
}

impl FromStr for IqMeta {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut values: [Option<&str>; 6] = [None; 6];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| meta_err(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            let slot = META_KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| meta_err(format!("unknown key {key:?}")))?;
            if values[slot].replace(value.trim()).is_some() {
                return Err(meta_err(format!("duplicate key {key:?}")));
            }
        }
        let get = |i: usize| values[i].ok_or_else(|| meta_err(format!("missing {}", META_KEYS[i])));

        let meta = IqMeta {
            sample_count: parse_field("sample_count", get(0)?)?,
            scheme: get(1)?
                .parse()
                .map_err(|_| meta_err(format!("unknown scheme {:?}", values[1].unwrap_or(""))))?,
            i_m: parse_field("i_m", get(2)?)?,
            i_p: parse_field("i_p", get(3)?)?,
            es_n0_db: parse_field("es_n0_db", get(4)?)?,
            seed: parse_field("seed", get(5)?)?,
        };
        if !(meta.i_m > 0.0 && meta.i_m <= 1.0) {
            return Err(meta_err(format!("i_m {} outside (0, 1]", meta.i_m)));
        }
        if meta.es_n0_db.is_nan() {
            return Err(meta_err("es_n0_db is NaN"));
        }
        Ok(meta)
    }
}

impl IqMeta {
    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }
}

/// Writes `samples` to `iq_path` and `meta` to its sidecar.
pub fn write_dump(iq_path: impl AsRef<Path>, samples: &[IqSample], meta: &IqMeta) -> Result<()> {
    if meta.sample_count != samples.len() {
        return Err(Error::LengthMismatch {
            expected: meta.sample_count,
            actual: samples.len(),
        });
    }
    write_iq_file(&iq_path, samples)?;
    meta.write_file(sidecar_path(&iq_path))
}

/// Reads a dump and checks it against its sidecar.
pub fn read_dump(iq_path: impl AsRef<Path>) -> Result<(Vec<IqSample>, IqMeta)> {
    let meta = IqMeta::read_file(sidecar_path(&iq_path))?;
    let samples = read_iq_file(&iq_path)?;
    if samples.len() != meta.sample_count {
        return Err(Error::LengthMismatch {
            expected: meta.sample_count,
            actual: samples.len(),
        });
    }
    Ok((samples, meta))
}
