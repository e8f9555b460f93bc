//! Per-round CSV rows and run summaries.

use std::fmt;
use std::fs;
use std::path::Path;

use dbf_core::sim::ExperimentResult;
use dbf_core::{Digest, SimConfig};
use serde::{Deserialize, Serialize};

use crate::config::Overrides;
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "run_id,preset,rng_seed,round,converged_nodes,median_set_size,total_bits_sent,hash_invocations,elements_transferred";

/// One round of one run. Counters are per round, not cumulative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub preset: String,
    pub rng_seed: u64,
    pub round: u32,
    pub converged_nodes: usize,
    pub median_set_size: usize,
    pub total_bits_sent: u64,
    pub hash_invocations: u64,
    pub elements_transferred: u64,
}

/// First 16 hex digits of SHA-256 over the label and the full configuration.
pub fn run_id(label: &str, config: &SimConfig) -> String {
    let mut material = label.as_bytes().to_vec();
    material.push(b'\n');
    material.extend_from_slice(Overrides::from_config(config).to_json().as_bytes());
    Digest::hash(&material).to_hex()[..16].to_string()
}

/// Rows for every executed round. A run that starts converged executes no
/// rounds and is reported by its initial state instead.
pub fn rows_for_run(label: &str, config: &SimConfig, result: &ExperimentResult) -> Vec<ResultRow> {
    let id = run_id(label, config);
    let executed = if result.metrics.len() > 1 {
        &result.metrics[1..]
    } else {
        &result.metrics[..]
    };
    executed
        .iter()
        .map(|m| ResultRow {
            run_id: id.clone(),
            preset: label.to_string(),
            rng_seed: config.rng_seed,
            round: m.round,
            converged_nodes: m.converged_nodes,
            median_set_size: m.median_set_size,
            total_bits_sent: m.total_bits_sent,
            hash_invocations: m.hash_invocations,
            elements_transferred: m.elements_transferred,
        })
        .collect()
}

pub fn csv_bytes(rows: &[ResultRow]) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(CliError::usage("no result rows to write"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("writing to memory cannot fail");
    }
    Ok(w.into_inner().expect("writing to memory cannot fail"))
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let bytes = csv_bytes(rows)?;
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Summary {
    pub rounds: u32,
    pub converged_nodes: usize,
    pub median_set_size: usize,
    pub total_bits_sent: u64,
    pub hash_invocations: u64,
    pub elements_transferred: u64,
}

impl Summary {
    /// Summary of a single run's rows, in round order.
    pub fn from_rows(rows: &[ResultRow]) -> Option<Summary> {
        let last = rows.last()?;
        Some(Summary {
            rounds: last.round,
            converged_nodes: last.converged_nodes,
            median_set_size: last.median_set_size,
            total_bits_sent: rows.iter().map(|r| r.total_bits_sent).sum(),
            hash_invocations: rows.iter().map(|r| r.hash_invocations).sum(),
            elements_transferred: rows.iter().map(|r| r.elements_transferred).sum(),
        })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rounds               {}", self.rounds)?;
        writeln!(f, "converged_nodes      {}", self.converged_nodes)?;
        writeln!(f, "median_set_size      {}", self.median_set_size)?;
        writeln!(f, "total_bits_sent      {}", self.total_bits_sent)?;
        writeln!(f, "hash_invocations     {}", self.hash_invocations)?;
        write!(f, "elements_transferred {}", self.elements_transferred)
    }
}
