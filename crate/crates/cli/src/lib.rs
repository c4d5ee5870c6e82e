//! Batch driver for the toy LP trajectories, the QP and RPCA benchmarks and
//! the step-size validator.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, Overrides, SolverSection};
pub use experiments::{run_experiment, Outcome};
pub use output::{emit_csv, CsvRecord, SolverRow, TrajectoryRow, VerdictRow};
