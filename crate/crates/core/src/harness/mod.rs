//! Experiment orchestration.

pub mod aggregate;
pub mod config;
pub mod export;
pub mod movielens;
pub mod presets;
pub mod runner;
pub mod validate;

pub use aggregate::{AggregateResult, AlgorithmAggregate, Interval};
pub use config::{AlgorithmKind, BenchConfig, ExperimentConfig, InstanceSpec};
pub use export::{export_results, load_results};
pub use runner::{run_experiment, ExperimentOutput, RunRecord};
