//! Experiment harness for the `ringsig` modem.
//!
//! Every run is a pure function of its [`ExperimentConfig`]: per-trial seeds
//! are derived from the master seed and the (grid point, trial) pair, so
//! results do not depend on thread count or scheduling.

pub mod config;
pub mod error;
pub mod experiments;
pub mod link;

pub use config::{ExperimentConfig, ExperimentKind, ReceiverMode};
pub use error::{HarnessError, Result};
