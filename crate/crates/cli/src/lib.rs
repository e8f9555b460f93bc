//! Experiment runner for distributed bloom filter reconciliation.
//!
//! Wraps the simulator in presets for the two experiments, writes one CSV
//! row per round and renders convergence charts.

pub mod chart;
pub mod config;
pub mod error;
pub mod experiment;
pub mod preset;
pub mod results;

pub use error::{CliError, Result};
pub use preset::Preset;
pub use results::{ResultRow, Summary};
