//! One-exchange reconciliation by filter reduction.
//!
//! The receiver of a filter builds its own filter under the same mapping and
//! subtracts the received one. A `-1` entry marks a bit the peer has set but
//! the receiver has not, so the peer holds at least one element the receiver
//! lacks. A `+1` entry is the reverse. Requested indices are resolved back to
//! elements by the side that holds them.

use std::collections::BTreeSet;

use crate::bloom::{
    derive_params, populate_standard, standard_indices, BitFilter, FilterParams, Populated,
    STANDARD_HASHES_PER_ELEMENT,
};
use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::mapping::{dbf_indices, populate_dbf, PairMapping};
use crate::wire::ElementTransfer;

/// How elements land in a filter for one exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterMapping {
    /// Double hashing with a salt; identical for every peer.
    Standard { salt: u64 },
    /// XOR against a per-pair chain.
    Distributed(PairMapping),
}

impl FilterMapping {
    pub fn indices(&self, element: &Digest, params: &FilterParams) -> Vec<u32> {
        match self {
            FilterMapping::Standard { salt } => {
                standard_indices(element, params.m(), params.k(), *salt)
            }
            FilterMapping::Distributed(mapping) => dbf_indices(element, mapping, params.m()),
        }
    }

    /// Hash evaluations needed to compute one element's indices.
    pub fn hashes_per_element(&self) -> u64 {
        match self {
            FilterMapping::Standard { .. } => STANDARD_HASHES_PER_ELEMENT,
            FilterMapping::Distributed(_) => 0,
        }
    }

    pub fn populate<'a, I>(&self, elements: I, params: &FilterParams) -> Populated
    where
        I: IntoIterator<Item = &'a Digest>,
    {
        match self {
            FilterMapping::Standard { salt } => populate_standard(elements, params, *salt),
            FilterMapping::Distributed(mapping) => {
                debug_assert_eq!(mapping.k(), params.k());
                populate_dbf(elements, mapping, params.m())
            }
        }
    }
}

/// Elementwise `own - received`, entries in `{-1, 0, +1}`.
pub fn reduce_filters(own: &BitFilter, received: &BitFilter) -> Result<Vec<i8>> {
    if own.m() != received.m() || own.k() != received.k() {
        return Err(Error::ShapeMismatch {
            own_m: own.m(),
            own_k: own.k(),
            other_m: received.m(),
            other_k: received.k(),
        });
    }
    Ok((0..own.m())
        .map(|i| i8::from(own.get(i)) - i8::from(received.get(i)))
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Classified {
    /// Positions where the peer has a bit the receiver lacks.
    pub missing: Vec<u32>,
    /// Positions where the receiver has a bit the peer lacks.
    pub surplus: Vec<u32>,
}

pub fn classify_indices(reduction: &[i8]) -> Classified {
    let mut out = Classified::default();
    for (i, &entry) in reduction.iter().enumerate() {
        match entry {
            -1 => out.missing.push(i as u32),
            1 => out.surplus.push(i as u32),
            _ => {}
        }
    }
    out
}

/// Every local element with at least one index in `requested`, plus the hash
/// evaluations spent. `requested` must be within `[0, m)`.
pub fn resolve_indices<'a, I>(
    requested: &[u32],
    local: I,
    mapping: &FilterMapping,
    params: &FilterParams,
) -> (Vec<Digest>, u64)
where
    I: IntoIterator<Item = &'a Digest>,
{
    if requested.is_empty() {
        return (Vec::new(), 0);
    }
    let mut wanted = BitFilter::new(params.m(), params.k());
    wanted.insert_indices(requested);
    let mut hashes = 0;
    let mut found = Vec::new();
    for element in local {
        hashes += mapping.hashes_per_element();
        if mapping
            .indices(element, params)
            .iter()
            .any(|&i| wanted.get(i))
        {
            found.push(*element);
        }
    }
    (found, hashes)
}

/// Adds the incoming digests to `local`; returns how many were new.
pub fn apply_transfer(local: &mut BTreeSet<Digest>, incoming: &ElementTransfer) -> usize {
    incoming
        .digests
        .iter()
        .filter(|d| local.insert(**d))
        .count()
}

/// Parameters for a pair, sized for the larger of the two sets.
pub fn negotiate_params(n_a: u64, n_b: u64, p_target: f64) -> Result<FilterParams> {
    derive_params(n_a.max(n_b), p_target)
}
