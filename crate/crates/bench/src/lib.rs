//! Seeded experiment runner for the planners in `rsbg_core`.
//!
//! An [`ExperimentConfig`] names a domain, a list of planners and a trial
//! count. [`run_experiment`] plays every planner on every trial with paired
//! random streams (see [`seeds`]) and aggregates the outcomes;
//! [`output::write_results`] lays the results out on disk.

pub mod cli;
pub mod config;
pub mod error;
pub mod metrics;
pub mod output;
pub mod runner;
pub mod seeds;

pub use config::{DomainKind, ExperimentConfig, PlannerSpec, ResolvedPlanner};
pub use error::BenchError;
pub use metrics::{summarize, MetricsSummary, TrialRecord};
pub use output::ResultsFile;
pub use runner::{replay_trial, run_experiment, run_experiment_with_workers, ExperimentOutput};
