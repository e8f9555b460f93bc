//! Deterministic round-based gossip simulator.
//!
//! Every round, each node announces a filter to each of its neighbors. The
//! receiver reduces its own filter against the announcement, requests the
//! indices it is missing and the announcer answers with every element
//! covering them.
//!
//! Two switches control the round semantics:
//!
//! - [`Neighbors`]: whether a chosen link carries announcements one way
//!   (chooser to chosen) or both ways.
//! - [`Delivery`]: whether transfers land immediately, so later exchanges in
//!   the same round see them, or are buffered until every exchange of the
//!   round is done. With buffering the outcome does not depend on edge
//!   order; without it, edges are processed in ascending `(from, to)` order.
//!
//! The defaults (mutual links, immediate delivery) are the ones the
//! experiment presets use.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloom::{derive_params, BitFilter, FilterParams};
use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::mapping::{derive_mapping, interaction_seed, pair_seed, SeedMode};
use crate::reconcile::{
    apply_transfer, classify_indices, negotiate_params, reduce_filters, resolve_indices,
    FilterMapping,
};
use crate::wire::{ElementTransfer, FilterAnnounce, IndexRequest, MappingKind, Message, SizeProbe};

/// Salt shared by every standard filter in the network.
pub const STANDARD_SALT: u64 = 0x5eed_b100_f11e_7000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Standard,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sizing {
    /// Every filter is sized for the whole universe.
    FixedUniverse,
    /// Each pair exchanges set sizes and sizes for the larger one.
    Adaptive,
}

/// Which way elements can flow over a chosen neighbor link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Neighbors {
    /// Only the chooser announces over the link.
    Directed,
    /// Both endpoints of a chosen link announce to each other.
    Mutual,
}

/// When received elements join the receiver's set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Delivery {
    /// Transfers are buffered and applied after every edge of the round.
    EndOfRound,
    /// Transfers are applied as soon as the exchange completes.
    Immediate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_nodes: usize,
    pub out_degree: usize,
    pub universe_size: usize,
    pub initial_subset_size: usize,
    pub p_target: f64,
    pub filter_kind: FilterKind,
    pub sizing: Sizing,
    pub seed_mode: SeedMode,
    pub rng_seed: u64,
    pub max_rounds: u32,
    pub push_surplus: bool,
    pub neighbors: Neighbors,
    pub delivery: Delivery,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_nodes: 50,
            out_degree: 10,
            universe_size: 1000,
            initial_subset_size: 200,
            p_target: 0.5,
            filter_kind: FilterKind::Distributed,
            sizing: Sizing::FixedUniverse,
            seed_mode: SeedMode::PairStatic,
            rng_seed: 0,
            max_rounds: 50,
            push_surplus: false,
            neighbors: Neighbors::Mutual,
            delivery: Delivery::Immediate,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_nodes == 0 {
            return fail("num_nodes must be at least 1".into());
        }
        if self.out_degree >= self.num_nodes {
            return fail(format!(
                "out_degree {} must be below num_nodes {}",
                self.out_degree, self.num_nodes
            ));
        }
        if self.universe_size == 0 {
            return fail("universe_size must be at least 1".into());
        }
        if self.initial_subset_size > self.universe_size {
            return fail(format!(
                "initial_subset_size {} exceeds universe_size {}",
                self.initial_subset_size, self.universe_size
            ));
        }
        if self.universe_size > u32::MAX as usize {
            return fail("universe_size must fit in 32 bits".into());
        }
        if !(self.p_target > 0.0 && self.p_target < 1.0) {
            return Err(Error::InvalidFalsePositiveRate(self.p_target));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub id: Digest,
    pub elements: BTreeSet<Digest>,
    pub hash_invocations: u64,
    pub bits_sent: u64,
    pub bits_received: u64,
    pub elements_received: u64,
}

impl NodeState {
    fn new(id: Digest, elements: BTreeSet<Digest>) -> Self {
        NodeState {
            id,
            elements,
            hash_invocations: 0,
            bits_sent: 0,
            bits_received: 0,
            elements_received: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundMetrics {
    pub round: u32,
    pub converged_nodes: usize,
    pub median_set_size: usize,
    pub total_bits_sent: u64,
    pub hash_invocations: u64,
    pub elements_transferred: u64,
}

/// `universe_size` distinct random digests.
pub fn build_universe<R: Rng>(universe_size: usize, rng: &mut R) -> Vec<Digest> {
    let mut seen = HashSet::with_capacity(universe_size);
    let mut universe = Vec::with_capacity(universe_size);
    while universe.len() < universe_size {
        let d = Digest(rng.gen());
        if seen.insert(d) {
            universe.push(d);
        }
    }
    universe
}

/// One uniform sample without replacement per node. Node `i` gets id
/// `H(i)`.
///
/// # Panics
///
/// Panics if `subset_size` exceeds the universe.
pub fn assign_subsets<R: Rng>(
    universe: &[Digest],
    num_nodes: usize,
    subset_size: usize,
    rng: &mut R,
) -> Vec<NodeState> {
    (0..num_nodes)
        .map(|i| {
            let elements = sample(rng, universe.len(), subset_size)
                .into_iter()
                .map(|j| universe[j])
                .collect();
            NodeState::new(Digest::node_id(i as u64), elements)
        })
        .collect()
}

/// `out_degree` distinct random out-neighbors per node, never itself.
/// Each list is sorted.
///
/// # Panics
///
/// Panics if `out_degree >= num_nodes`.
pub fn build_topology<R: Rng>(num_nodes: usize, out_degree: usize, rng: &mut R) -> Vec<Vec<usize>> {
    assert!(out_degree < num_nodes, "out_degree must be below num_nodes");
    (0..num_nodes)
        .map(|u| {
            let mut neighbors: Vec<usize> = sample(rng, num_nodes - 1, out_degree)
                .into_iter()
                .map(|j| if j >= u { j + 1 } else { j })
                .collect();
            neighbors.sort_unstable();
            neighbors
        })
        .collect()
}

/// Lower middle value for even counts.
pub fn lower_median(values: &mut [usize]) -> usize {
    if values.is_empty() {
        return 0;
    }
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

/// Cached standard filters for one node, valid until its set changes.
type StandardCache = HashMap<(u32, u16), BitFilter>;

#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    universe: Vec<Digest>,
    nodes: Vec<NodeState>,
    topology: Vec<Vec<usize>>,
    fixed_params: Option<FilterParams>,
    standard_cache: Vec<StandardCache>,
    round: u32,
}

struct Pending {
    to: usize,
    transfer: ElementTransfer,
}

impl Simulation {
    /// Builds universe, subsets and topology, in that order, from one
    /// generator seeded with `rng_seed`. Filter kind and sizing do not touch
    /// the generator, so both filter kinds see identical inputs.
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let universe = build_universe(config.universe_size, &mut rng);
        let nodes = assign_subsets(
            &universe,
            config.num_nodes,
            config.initial_subset_size,
            &mut rng,
        );
        let topology = build_topology(config.num_nodes, config.out_degree, &mut rng);
        Self::from_parts(config, universe, nodes, topology)
    }

    /// Starts from explicit state. Elements outside the universe and
    /// malformed neighbor lists are rejected.
    pub fn from_parts(
        config: SimConfig,
        universe: Vec<Digest>,
        nodes: Vec<NodeState>,
        topology: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if universe.len() != config.universe_size {
            return Err(Error::Config(
                "universe does not match universe_size".into(),
            ));
        }
        if !(config.p_target > 0.0 && config.p_target < 1.0) {
            return Err(Error::InvalidFalsePositiveRate(config.p_target));
        }
        if nodes.len() != topology.len() {
            return Err(Error::Config("topology and node count differ".into()));
        }
        let members: HashSet<&Digest> = universe.iter().collect();
        if nodes
            .iter()
            .any(|n| n.elements.iter().any(|e| !members.contains(e)))
        {
            return Err(Error::Config(
                "node holds an element outside the universe".into(),
            ));
        }
        for (u, neighbors) in topology.iter().enumerate() {
            let distinct: HashSet<&usize> = neighbors.iter().collect();
            if distinct.len() != neighbors.len()
                || neighbors.iter().any(|&v| v == u || v >= nodes.len())
            {
                return Err(Error::Config(format!("bad neighbor list for node {u}")));
            }
        }
        let fixed_params = match config.sizing {
            Sizing::FixedUniverse => {
                Some(derive_params(config.universe_size as u64, config.p_target)?)
            }
            Sizing::Adaptive => None,
        };
        let standard_cache = vec![StandardCache::new(); nodes.len()];
        Ok(Simulation {
            config,
            universe,
            nodes,
            topology,
            fixed_params,
            standard_cache,
            round: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn universe(&self) -> &[Digest] {
        &self.universe
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn topology(&self) -> &[Vec<usize>] {
        &self.topology
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn is_converged(&self, node: usize) -> bool {
        self.nodes[node].elements.len() == self.universe.len()
    }

    pub fn converged_nodes(&self) -> usize {
        (0..self.nodes.len())
            .filter(|&i| self.is_converged(i))
            .count()
    }

    pub fn median_set_size(&self) -> usize {
        let mut sizes: Vec<usize> = self.nodes.iter().map(|n| n.elements.len()).collect();
        lower_median(&mut sizes)
    }

    /// Metrics for the current state with zero traffic, used for round 0.
    pub fn snapshot(&self) -> RoundMetrics {
        RoundMetrics {
            round: self.round,
            converged_nodes: self.converged_nodes(),
            median_set_size: self.median_set_size(),
            ..RoundMetrics::default()
        }
    }

    /// Filter the node at `node` would announce under a standard mapping
    /// with `params`, reusing the cached copy when its set is unchanged.
    /// Returns the filter and the hash evaluations spent.
    pub fn standard_filter(&mut self, node: usize, params: &FilterParams) -> (BitFilter, u64) {
        let key = (params.m(), params.k());
        if let Some(cached) = self.standard_cache[node].get(&key) {
            return (cached.clone(), 0);
        }
        let populated = FilterMapping::Standard {
            salt: STANDARD_SALT,
        }
        .populate(self.nodes[node].elements.iter(), params);
        self.standard_cache[node].insert(key, populated.filter.clone());
        (populated.filter, populated.hash_invocations)
    }

    /// Directed exchanges of one round, in processing order.
    pub fn gossip_edges(&self) -> Vec<(usize, usize)> {
        match self.config.neighbors {
            Neighbors::Directed => self
                .topology
                .iter()
                .enumerate()
                .flat_map(|(u, ns)| ns.iter().map(move |&v| (u, v)))
                .collect(),
            Neighbors::Mutual => {
                let mut links = vec![BTreeSet::new(); self.topology.len()];
                for (u, ns) in self.topology.iter().enumerate() {
                    for &v in ns {
                        links[u].insert(v);
                        links[v].insert(u);
                    }
                }
                links
                    .into_iter()
                    .enumerate()
                    .flat_map(|(u, ns)| ns.into_iter().map(move |v| (u, v)))
                    .collect()
            }
        }
    }

    pub fn run_round(&mut self) -> RoundMetrics {
        self.run_round_observed(&mut |_, _| {})
    }

    /// Runs one round. `observer` sees every message with its encoded bytes,
    /// in processing order.
    pub fn run_round_observed(
        &mut self,
        observer: &mut dyn FnMut(&Message, &[u8]),
    ) -> RoundMetrics {
        self.round += 1;
        let mut metrics = RoundMetrics {
            round: self.round,
            ..RoundMetrics::default()
        };
        let mut pending = Vec::new();
        for (u, v) in self.gossip_edges() {
            self.exchange(u, v, &mut metrics, &mut pending, observer);
        }

        for Pending { to, transfer } in pending {
            self.deliver(to, &transfer);
        }

        metrics.converged_nodes = self.converged_nodes();
        metrics.median_set_size = self.median_set_size();
        metrics
    }

    fn deliver(&mut self, to: usize, transfer: &ElementTransfer) {
        let added = apply_transfer(&mut self.nodes[to].elements, transfer);
        self.nodes[to].elements_received += transfer.digests.len() as u64;
        if added > 0 {
            self.standard_cache[to].clear();
        }
    }

    fn send(
        &mut self,
        from: usize,
        to: usize,
        msg: &Message,
        metrics: &mut RoundMetrics,
        observer: &mut dyn FnMut(&Message, &[u8]),
    ) -> Vec<u8> {
        let bytes = msg.encode();
        let bits = 8 * bytes.len() as u64;
        self.nodes[from].bits_sent += bits;
        self.nodes[to].bits_received += bits;
        metrics.total_bits_sent += bits;
        observer(msg, &bytes);
        bytes
    }

    fn charge(&mut self, node: usize, hashes: u64, metrics: &mut RoundMetrics) {
        self.nodes[node].hash_invocations += hashes;
        metrics.hash_invocations += hashes;
    }

    /// Reconciliation on the directed edge `u -> v`: elements flow from `u`
    /// to `v`, and from `v` to `u` as well when surplus pushing is on.
    fn exchange(
        &mut self,
        u: usize,
        v: usize,
        metrics: &mut RoundMetrics,
        pending: &mut Vec<Pending>,
        observer: &mut dyn FnMut(&Message, &[u8]),
    ) {
        let n_u = self.nodes[u].elements.len() as u64;
        let n_v = self.nodes[v].elements.len() as u64;
        let params = match self.fixed_params {
            Some(p) => p,
            None => {
                if n_u == 0 && n_v == 0 {
                    return;
                }
                let probe_u = Message::SizeProbe(SizeProbe { n: n_u as u32 });
                let probe_v = Message::SizeProbe(SizeProbe { n: n_v as u32 });
                self.send(u, v, &probe_u, metrics, observer);
                self.send(v, u, &probe_v, metrics, observer);
                negotiate_params(n_u, n_v, self.config.p_target)
                    .expect("sizes and target validated")
            }
        };

        let (mapping, kind, counter) = match self.config.filter_kind {
            FilterKind::Standard => (
                FilterMapping::Standard {
                    salt: STANDARD_SALT,
                },
                MappingKind::Standard,
                0,
            ),
            FilterKind::Distributed => {
                let (id_u, id_v) = (self.nodes[u].id, self.nodes[v].id);
                let (seed, kind) = match self.config.seed_mode {
                    SeedMode::PairStatic => (pair_seed(&id_u, &id_v), MappingKind::PairStatic),
                    SeedMode::PerInteraction => {
                        // one hash per endpoint for the seed itself
                        self.charge(u, 1, metrics);
                        self.charge(v, 1, metrics);
                        (
                            interaction_seed(&id_u, &id_v, u64::from(self.round)),
                            MappingKind::PerInteraction,
                        )
                    }
                };
                let pair = derive_mapping(seed, params.k());
                // both endpoints derive the chain
                self.charge(u, pair.hash_invocations(), metrics);
                self.charge(v, pair.hash_invocations(), metrics);
                (FilterMapping::Distributed(pair), kind, seed.counter)
            }
        };

        let own_u = self.filter_for(u, &mapping, &params, metrics);
        let announce = Message::FilterAnnounce(FilterAnnounce {
            sender: self.nodes[u].id,
            kind,
            counter,
            n_sender: n_u as u32,
            filter: own_u,
        });
        let bytes = self.send(u, v, &announce, metrics, observer);
        let received = match Message::decode(&bytes) {
            Ok(Message::FilterAnnounce(a)) => a.filter,
            other => unreachable!("announce failed to round-trip: {other:?}"),
        };

        let own_v = self.filter_for(v, &mapping, &params, metrics);
        let reduction = reduce_filters(&own_v, &received).expect("shared params");
        let classified = classify_indices(&reduction);

        if !classified.missing.is_empty() {
            let request = Message::IndexRequest(IndexRequest {
                indices: classified.missing,
            });
            self.send(v, u, &request, metrics, observer);
            let Message::IndexRequest(request) = request else {
                unreachable!()
            };
            let (digests, hashes) = resolve_indices(
                &request.indices,
                self.nodes[u].elements.iter(),
                &mapping,
                &params,
            );
            self.charge(u, hashes, metrics);
            self.transfer(u, v, digests, metrics, pending, observer);
        }

        if self.config.push_surplus && !classified.surplus.is_empty() {
            let (digests, hashes) = resolve_indices(
                &classified.surplus,
                self.nodes[v].elements.iter(),
                &mapping,
                &params,
            );
            self.charge(v, hashes, metrics);
            self.transfer(v, u, digests, metrics, pending, observer);
        }
    }

    fn transfer(
        &mut self,
        from: usize,
        to: usize,
        digests: Vec<Digest>,
        metrics: &mut RoundMetrics,
        pending: &mut Vec<Pending>,
        observer: &mut dyn FnMut(&Message, &[u8]),
    ) {
        metrics.elements_transferred += digests.len() as u64;
        let msg = Message::ElementTransfer(ElementTransfer { digests });
        self.send(from, to, &msg, metrics, observer);
        let Message::ElementTransfer(transfer) = msg else {
            unreachable!()
        };
        match self.config.delivery {
            Delivery::EndOfRound => pending.push(Pending { to, transfer }),
            Delivery::Immediate => self.deliver(to, &transfer),
        }
    }

    fn filter_for(
        &mut self,
        node: usize,
        mapping: &FilterMapping,
        params: &FilterParams,
        metrics: &mut RoundMetrics,
    ) -> BitFilter {
        match mapping {
            FilterMapping::Standard { .. } => {
                let (filter, hashes) = self.standard_filter(node, params);
                self.charge(node, hashes, metrics);
                filter
            }
            FilterMapping::Distributed(_) => {
                mapping
                    .populate(self.nodes[node].elements.iter(), params)
                    .filter
            }
        }
    }

    pub fn into_nodes(self) -> Vec<NodeState> {
        self.nodes
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Round 0 (initial state) followed by one entry per executed round.
    pub metrics: Vec<RoundMetrics>,
    pub nodes: Vec<NodeState>,
}

impl ExperimentResult {
    pub fn last(&self) -> &RoundMetrics {
        self.metrics.last().expect("round 0 is always present")
    }
}

/// Runs rounds until every node has converged or `max_rounds` is reached.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentResult> {
    let sim = Simulation::new(config.clone())?;
    Ok(run_simulation(sim, &mut |_, _| {}))
}

pub fn run_simulation(
    mut sim: Simulation,
    observer: &mut dyn FnMut(&Message, &[u8]),
) -> ExperimentResult {
    let mut metrics = vec![sim.snapshot()];
    let num_nodes = sim.nodes().len();
    while sim.converged_nodes() < num_nodes && sim.round() < sim.config().max_rounds {
        metrics.push(sim.run_round_observed(observer));
    }
    ExperimentResult {
        metrics,
        nodes: sim.into_nodes(),
    }
}
