//! Feature-based modulation classifier used as the eavesdropper.
//!
//! Blocks of at least 1024 samples are reduced to phase-invariant
//! statistics ([`features`]), scored against per-class Gaussian mixtures
//! indexed by training SNR ([`model`]), and swept over shaping settings to
//! estimate how often shaped QPSK is still identified as QPSK ([`pmi`]).

pub mod dataset;
pub mod features;
pub mod model;
pub mod pmi;

pub use dataset::{synth_block, BlockSpec, DatasetSpec, Manifest, ManifestEntry};
pub use features::{extract_features, FeatureVector, FEATURE_DIM, MIN_BLOCK_LEN};
pub use model::{
    classify, train, Classification, ClassifierModel, ConfusionMatrix, Example, Split,
};
pub use pmi::{pmi_sweep, PmiPoint, PmiReport};
