//! Config-driven experiment runner and its file formats.

pub mod config;
pub mod plot;
pub mod records;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, ValidatedConfig};
pub use records::{read_decay_table, read_records, RunRecord};
pub use run::{compute_records, run_config_file, run_experiment, RunOptions, RunOutput};

/// Environment variable with the default worker thread count.
pub const THREADS_ENV: &str = "EXCURSION_LAB_THREADS";
