//! Overrides applied on top of a preset, from flags or a JSON file.
//!
//! JSON keys mirror the `SimConfig` field names. Enum values are snake_case
//! in JSON (`"per_interaction"`) and kebab-case on the command line.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use dbf_core::{Delivery, FilterKind, Neighbors, SeedMode, SimConfig, Sizing};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    Standard,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SizingArg {
    FixedUniverse,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SeedModeArg {
    PairStatic,
    PerInteraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NeighborsArg {
    Directed,
    Mutual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryArg {
    EndOfRound,
    Immediate,
}

macro_rules! mirror {
    ($arg:ident <-> $core:ident { $($v:ident),+ }) => {
        impl From<$arg> for $core {
            fn from(a: $arg) -> Self {
                match a { $($arg::$v => $core::$v),+ }
            }
        }
        impl From<$core> for $arg {
            fn from(c: $core) -> Self {
                match c { $($core::$v => $arg::$v),+ }
            }
        }
    };
}

mirror!(KindArg <-> FilterKind { Standard, Distributed });
mirror!(SizingArg <-> Sizing { FixedUniverse, Adaptive });
mirror!(SeedModeArg <-> SeedMode { PairStatic, PerInteraction });
mirror!(NeighborsArg <-> Neighbors { Directed, Mutual });
mirror!(DeliveryArg <-> Delivery { EndOfRound, Immediate });

/// Optional values for every `SimConfig` field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub universe_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_subset_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_kind: Option<KindArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizing: Option<SizingArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_mode: Option<SeedModeArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub push_surplus: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<NeighborsArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delivery: Option<DeliveryArg>,
}

impl Overrides {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// Every field set, in declaration order. Serializes canonically.
    pub fn from_config(c: &SimConfig) -> Self {
        Overrides {
            num_nodes: Some(c.num_nodes),
            out_degree: Some(c.out_degree),
            universe_size: Some(c.universe_size),
            initial_subset_size: Some(c.initial_subset_size),
            p_target: Some(c.p_target),
            filter_kind: Some(c.filter_kind.into()),
            sizing: Some(c.sizing.into()),
            seed_mode: Some(c.seed_mode.into()),
            rng_seed: Some(c.rng_seed),
            max_rounds: Some(c.max_rounds),
            push_surplus: Some(c.push_surplus),
            neighbors: Some(c.neighbors.into()),
            delivery: Some(c.delivery.into()),
        }
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged_with(self, other: Overrides) -> Overrides {
        Overrides {
            num_nodes: other.num_nodes.or(self.num_nodes),
            out_degree: other.out_degree.or(self.out_degree),
            universe_size: other.universe_size.or(self.universe_size),
            initial_subset_size: other.initial_subset_size.or(self.initial_subset_size),
            p_target: other.p_target.or(self.p_target),
            filter_kind: other.filter_kind.or(self.filter_kind),
            sizing: other.sizing.or(self.sizing),
            seed_mode: other.seed_mode.or(self.seed_mode),
            rng_seed: other.rng_seed.or(self.rng_seed),
            max_rounds: other.max_rounds.or(self.max_rounds),
            push_surplus: other.push_surplus.or(self.push_surplus),
            neighbors: other.neighbors.or(self.neighbors),
            delivery: other.delivery.or(self.delivery),
        }
    }

    /// Applies the set fields and validates the result.
    pub fn apply(&self, mut c: SimConfig) -> Result<SimConfig> {
        if let Some(v) = self.num_nodes {
            c.num_nodes = v;
        }
        if let Some(v) = self.out_degree {
            c.out_degree = v;
        }
        if let Some(v) = self.universe_size {
            c.universe_size = v;
        }
        if let Some(v) = self.initial_subset_size {
            c.initial_subset_size = v;
        }
        if let Some(v) = self.p_target {
            c.p_target = v;
        }
        if let Some(v) = self.filter_kind {
            c.filter_kind = v.into();
        }
        if let Some(v) = self.sizing {
            c.sizing = v.into();
        }
        if let Some(v) = self.seed_mode {
            c.seed_mode = v.into();
        }
        if let Some(v) = self.rng_seed {
            c.rng_seed = v;
        }
        if let Some(v) = self.max_rounds {
            c.max_rounds = v;
        }
        if let Some(v) = self.push_surplus {
            c.push_surplus = v;
        }
        if let Some(v) = self.neighbors {
            c.neighbors = v.into();
        }
        if let Some(v) = self.delivery {
            c.delivery = v.into();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}
