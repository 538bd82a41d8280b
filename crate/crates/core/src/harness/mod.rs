//! Monte-Carlo experiments and verification suites behind the CLI.

pub mod config;
pub mod experiment;
pub mod verify;

pub use config::{preset, ExperimentConfig, MeasurementModel, MuRule, SmoothnessRule, PRESET_NAMES};
pub use experiment::{
    aggregate, emit_series, load_archive, run_experiment, run_trial, Aggregate, ExperimentResult,
    RunOptions, TrialRow,
};
