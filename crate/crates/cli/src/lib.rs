//! Experiment runner for adversarial hypothesis testing: reads instance
//! files and a TOML manifest, runs solvers, simulations and audits, and
//! writes JSON and CSV reports.

pub mod config;
pub mod error;
pub mod formats;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, LogBase, Mode, Overrides};
pub use error::{CliError, Result};
pub use run::{run, Outcome};
