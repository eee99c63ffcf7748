//! Experiment harness for the sequence memories in `pam-core`: capacity,
//! correlation, forgetting, multiple-possibility generation, noise,
//! efficiency and the random-SDR overlap check.

pub mod config;
pub mod error;
pub mod memory;
pub mod report;
pub mod runner;

pub use config::{Dataset, Experiment, ExperimentConfig, ModelKind};
pub use error::{BenchError, Result};
pub use memory::{Memory, ModelSpec, Replay};
pub use report::{emit_report, to_csv};
pub use runner::{find_capacity, run_suite, TrialRecord};
