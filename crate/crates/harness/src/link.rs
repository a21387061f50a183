//! One simulated frame through transmitter, channel and receiver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringsig::channel::{apply_channel, rotate, ChannelConfig};
use ringsig::framing::build_frame;
use ringsig::modem::{demodulate, symbol_indices_to_bits, IqSample, ModConfig};
use ringsig::rng::derive_seed;
use ringsig::shaping::{invert_shaping, FactorStream, ShapingConfig};
use ringsig::sync::receive_frame;
use ringsig::{Error, ModScheme};

use crate::config::{ExperimentConfig, ReceiverMode};
use crate::error::Result;

/// Symbols of silence appended after each frame.
pub const TAIL_SYMBOLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPoint {
    pub scheme: ModScheme,
    pub es_n0_db: f64,
    pub i_m: f64,
    pub i_p: u32,
}

/// Error counts for one frame. A frame the receiver cannot find counts
/// every bit as half an error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Outcome {
    pub bits: u64,
    pub bit_errors: f64,
    pub symbols: u64,
    pub symbol_errors: f64,
    pub frames_lost: u64,
}

impl Outcome {
    fn lost(bits: usize, symbols: usize, order: usize) -> Self {
        Outcome {
            bits: bits as u64,
            bit_errors: bits as f64 / 2.0,
            symbols: symbols as u64,
            symbol_errors: symbols as f64 * (1.0 - 1.0 / order as f64),
            frames_lost: 1,
        }
    }

    fn count(sent: &[u8], got: &[u8], bps: usize) -> Self {
        let bit_errors = sent.iter().zip(got).filter(|(a, b)| a != b).count();
        let symbol_errors = sent
            .chunks(bps)
            .zip(got.chunks(bps))
            .filter(|(a, b)| a != b)
            .count();
        Outcome {
            bits: sent.len() as u64,
            bit_errors: bit_errors as f64,
            symbols: (sent.len() / bps) as u64,
            symbol_errors: symbol_errors as f64,
            frames_lost: 0,
        }
    }
}

impl std::ops::AddAssign for Outcome {
    fn add_assign(&mut self, o: Self) {
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.symbols += o.symbols;
        self.symbol_errors += o.symbol_errors;
        self.frames_lost += o.frames_lost;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialResult {
    pub legit: Outcome,
    /// Same capture decoded with an unrelated shaping seed.
    pub attacker: Option<Outcome>,
}

/// Runs one frame. Payload bits, the shared shaping seed, the noise and the
/// attacker's guess are all derived from `seed`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    point: LinkPoint,
    seed: u64,
    with_attacker: bool,
) -> Result<TrialResult> {
    let spec = cfg.frame_spec();
    let scheme = point.scheme;
    let mod_cfg = ModConfig::new(scheme, cfg.amplitude)?;
    let shaping = ShapingConfig::new(derive_seed(seed, &[1]), point.i_p, point.i_m)?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let payload: Vec<u8> = (0..spec.data_bits).map(|_| rng.random_range(0..2u8)).collect();
    let frame = build_frame(&payload, &spec, &mod_cfg, &shaping)?;

    let zero = IqSample::new(0.0, 0.0);
    let mut tx = vec![zero; cfg.lead_in];
    tx.extend(frame.samples());
    tx.extend(std::iter::repeat_n(zero, TAIL_SYMBOLS));
    let channel = ChannelConfig {
        es_n0_db: point.es_n0_db,
        cfo: cfg.cfo,
        phase_offset: cfg.phase_offset,
        noise_seed: derive_seed(seed, &[2]),
        noise_reference: cfg.noise_reference(),
    };
    let rx = apply_channel(&tx, &channel)?;

    let decode = |key: &ShapingConfig| -> Result<Outcome> {
        let sent = &frame.payload_bits;
        let symbols = frame.data.len();
        match cfg.receiver {
            ReceiverMode::Full => {
                let sync = cfg.sync_config(scheme, point.i_p)?;
                match receive_frame(&rx, &mod_cfg, key, &spec, &sync, None) {
                    Ok(r) => Ok(Outcome::count(sent, &r.bits, scheme.bits_per_symbol())),
                    Err(Error::NoFrame { .. } | Error::LengthMismatch { .. }) => {
                        Ok(Outcome::lost(sent.len(), symbols, scheme.order()))
                    }
                    Err(e) => Err(e.into()),
                }
            }
            ReceiverMode::Coherent => {
                let start = cfg.lead_in + frame.header.len();
                let data = &rx[start..start + symbols];
                let phase0 = std::f64::consts::TAU * cfg.cfo * start as f64 + cfg.phase_offset;
                let aligned = rotate(data, -cfg.cfo, -phase0);
                let recovered = invert_shaping(&aligned, &FactorStream::generate(key, symbols))?;
                let bits = symbol_indices_to_bits(&demodulate(&recovered, &mod_cfg), scheme)?;
                Ok(Outcome::count(sent, &bits, scheme.bits_per_symbol()))
            }
        }
    };

    let legit = decode(&shaping)?;
    let attacker = if with_attacker {
        let guess = ShapingConfig::new(derive_seed(seed, &[3]), point.i_p, point.i_m)?;
        Some(decode(&guess)?)
    } else {
        None
    };
    Ok(TrialResult { legit, attacker })
}
