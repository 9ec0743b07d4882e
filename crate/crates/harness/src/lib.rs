//! Experiment harness: configuration, seeded sweeps, restricted weak-type
//! estimates and CSV/SVG output.

pub mod config;
pub mod experiments;
pub mod instances;
pub mod output;
pub mod weak;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use experiments::{run, run_experiment, RunError, RunOutcome};
