//! Experiment driver: scenario files, seeded batches, metrics, sweeps and robustness runs.

pub mod batch;
pub mod config;
pub mod error;
pub mod metrics;
pub mod output;
pub mod report;
pub mod robustness;
pub mod run;
pub mod stability;
pub mod stats;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use metrics::RunMetrics;
pub use run::{run_scenario, run_with, RunOutput};
