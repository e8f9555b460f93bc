//! Running presets, singly or as seed sweeps.

use std::ops::RangeInclusive;

use dbf_core::sim::{run_simulation, ExperimentResult};
use dbf_core::wire::Message;
use dbf_core::{SimConfig, Simulation};
use rayon::prelude::*;

use crate::config::Overrides;
use crate::error::{CliError, Result};
use crate::preset::Preset;
use crate::results::{rows_for_run, ResultRow};

#[derive(Debug, Clone)]
pub struct Run {
    pub preset: Preset,
    pub config: SimConfig,
    pub result: ExperimentResult,
    pub rows: Vec<ResultRow>,
}

/// Expands `preset` for `rng_seed` and applies `overrides` on top. An
/// `rng_seed` inside the overrides wins over the argument.
pub fn preset_config(preset: Preset, rng_seed: u64, overrides: &Overrides) -> Result<SimConfig> {
    overrides.apply(preset.config(rng_seed))
}

pub fn run_preset(preset: Preset, rng_seed: u64, overrides: &Overrides) -> Result<Run> {
    run_preset_observed(preset, rng_seed, overrides, &mut |_, _| {})
}

/// As `run_preset`, handing every encoded protocol message to `observer`.
pub fn run_preset_observed(
    preset: Preset,
    rng_seed: u64,
    overrides: &Overrides,
    observer: &mut dyn FnMut(&Message, &[u8]),
) -> Result<Run> {
    let config = preset_config(preset, rng_seed, overrides)?;
    let result = run_simulation(Simulation::new(config.clone())?, observer);
    let rows = rows_for_run(preset.name(), &config, &result);
    Ok(Run {
        preset,
        config,
        result,
        rows,
    })
}

/// Runs every seed in parallel. Runs come back in seed order.
pub fn sweep(
    preset: Preset,
    seeds: RangeInclusive<u64>,
    overrides: &Overrides,
) -> Result<Vec<Run>> {
    let overrides = Overrides {
        rng_seed: None,
        ..overrides.clone()
    };
    let seeds: Vec<u64> = seeds.collect();
    let mut runs = seeds
        .par_iter()
        .map(|&s| run_preset(preset, s, &overrides))
        .collect::<Result<Vec<Run>>>()?;
    runs.sort_by_key(|r| r.config.rng_seed);
    Ok(runs)
}

/// All rows of a sweep ordered by `(rng_seed, round)`.
pub fn sweep_rows(runs: &[Run]) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = runs.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    rows.sort_by_key(|r| (r.rng_seed, r.round));
    rows
}

/// Parses `a..b` (both ends included) or a single seed `a`.
pub fn parse_seed_range(s: &str) -> Result<RangeInclusive<u64>> {
    let bad = || CliError::usage(format!("invalid seed range `{s}` (expected a..b)"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.strip_prefix('=').unwrap_or(hi)),
        None => (s, s),
    };
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}
