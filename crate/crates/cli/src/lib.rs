//! Experiment harness: TOML configuration, the five experiment pipelines and
//! their CSV / plot-data output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::Config;
pub use error::CliError;
pub use experiments::{run, Check, Experiment, ExperimentResult, RateRow, SummaryRow};
