//! Experiment driver: configuration handling, runs, sweeps and the CSV/JSON
//! artifacts they produce.

pub mod config;
pub mod error;
pub mod experiment;

pub use config::{Algorithm, ExperimentConfig, FunctionSpec, Pair, RawConfig};
pub use error::CliError;
pub use experiment::{compare, run_approx, run_method, sweep_blocks, sweep_tau, RunSummary, Table};
