//! Experiment harness for the dynamic engine: adversaries, a TOML-driven
//! runner writing JSONL metrics, and the invariant suites behind the `dyncc`
//! binary.

pub mod adversary;
pub mod config;
pub mod metrics;
pub mod runner;
pub mod verify;

pub use config::Experiment;
pub use runner::{run_experiment, run_trial, Outcome};
