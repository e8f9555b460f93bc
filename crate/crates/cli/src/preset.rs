//! The four experiment presets.

use std::fmt;
use std::str::FromStr;

use dbf_core::{FilterKind, SeedMode, SimConfig, Sizing};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Preset {
    Exp1Sbf,
    Exp1Dbf,
    Exp2Sbf,
    Exp2Dbf,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Exp1Sbf,
        Preset::Exp1Dbf,
        Preset::Exp2Sbf,
        Preset::Exp2Dbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Exp1Sbf => "exp1-sbf",
            Preset::Exp1Dbf => "exp1-dbf",
            Preset::Exp2Sbf => "exp2-sbf",
            Preset::Exp2Dbf => "exp2-dbf",
        }
    }

    pub fn filter_kind(self) -> FilterKind {
        match self {
            Preset::Exp1Sbf | Preset::Exp2Sbf => FilterKind::Standard,
            Preset::Exp1Dbf | Preset::Exp2Dbf => FilterKind::Distributed,
        }
    }

    pub fn sizing(self) -> Sizing {
        match self {
            Preset::Exp1Sbf | Preset::Exp1Dbf => Sizing::FixedUniverse,
            Preset::Exp2Sbf | Preset::Exp2Dbf => Sizing::Adaptive,
        }
    }

    /// 50 nodes with 10 neighbors each, a 1000-element universe, 200 initial
    /// elements per node and a 50% target false positive rate.
    pub fn config(self, rng_seed: u64) -> SimConfig {
        SimConfig {
            num_nodes: 50,
            out_degree: 10,
            universe_size: 1000,
            initial_subset_size: 200,
            p_target: 0.5,
            filter_kind: self.filter_kind(),
            sizing: self.sizing(),
            seed_mode: SeedMode::PairStatic,
            rng_seed,
            ..SimConfig::default()
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "unknown preset `{s}` (expected one of exp1-sbf, exp1-dbf, exp2-sbf, exp2-dbf)"
                ))
            })
    }
}
