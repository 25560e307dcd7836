//! Experiment orchestration: configs, the policy store, scenario runs,
//! parameter sweeps and summaries.

pub mod config;
pub mod runner;
pub mod store;
pub mod summary;
pub mod sweep;

pub use config::{DetectionParams, ExperimentConfig, OUTPUT_ENV};
pub use runner::{run_all, run_experiment, run_experiment_with, run_single, Row, RunRecord};
pub use store::{train, Store, TrainParams, STORE_VERSION};
pub use summary::{summarize_dir, SummaryRow};
pub use sweep::{adjustment_stats, is_non_increasing, segment_stats, sweep, SweepRow, RECOVERY_RATE, RECOVERY_WINDOW};
