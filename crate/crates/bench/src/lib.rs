//! Experiment harness for the sketched least-squares solvers: configuration,
//! paired seeded trials, metrics, and CSV/JSON/SVG output.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{ExperimentConfig, ItersSpec, ParamMode, SolverKind, StopMode};
pub use error::{BenchError, Result};
pub use experiment::{estimate_pe, pe_limit, run_experiment, ExperimentOutput, RunRecord, Summary};
