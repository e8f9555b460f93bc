//! Distributed bloom filters and filter-reduction set reconciliation.
//!
//! The crate is split along the lines of the protocol:
//!
//! - [`bloom`]: the classic bloom filter, its false positive formulas and
//!   parameter derivation.
//! - [`mapping`]: per-pair (or per-interaction) filter mappings populated by
//!   XORing stored element digests with a short hash chain.
//! - [`reconcile`]: filter reduction, index classification and resolution of
//!   requested indices back to elements.
//! - [`wire`]: the binary message format used for bandwidth accounting and
//!   traces.
//! - [`sim`]: a deterministic, round-based gossip simulator.

pub mod bloom;
pub mod digest;
pub mod error;
pub mod mapping;
pub mod reconcile;
pub mod sim;
pub mod wire;

pub use bloom::{BitFilter, FilterParams, Populated};
pub use digest::Digest;
pub use error::{Error, Result};
pub use mapping::{MappingSeed, PairMapping, SeedMode};
pub use reconcile::FilterMapping;
pub use sim::{Delivery, FilterKind, Neighbors, RoundMetrics, SimConfig, Simulation, Sizing};
