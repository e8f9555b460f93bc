//! Unique filter mappings between peers.
//!
//! A mapping is a chain of `k` digests derived from a seed shared by both
//! ends of an interaction. Each stored element digest is XORed with every
//! chain digest and reduced modulo `m`, so populating a filter under a new
//! mapping costs `k` hash evaluations in total instead of `k` per element.

use crate::bloom::{BitFilter, Populated};
use crate::digest::Digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedMode {
    /// One mapping per unordered node pair, reused on every interaction.
    PairStatic,
    /// A fresh mapping per interaction, keyed by a counter.
    PerInteraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MappingSeed {
    pub value: Digest,
    pub mode: SeedMode,
    pub counter: u64,
}

/// Static seed for the pair `(a, b)`: `a XOR b`.
pub fn pair_seed(a: &Digest, b: &Digest) -> MappingSeed {
    MappingSeed {
        value: *a ^ *b,
        mode: SeedMode::PairStatic,
        counter: 0,
    }
}

/// Seed for one interaction: `H(a XOR b || counter)` with the counter in
/// big-endian. Costs one hash evaluation.
pub fn interaction_seed(a: &Digest, b: &Digest, counter: u64) -> MappingSeed {
    let mut material = [0u8; 40];
    material[..32].copy_from_slice((*a ^ *b).as_bytes());
    material[32..].copy_from_slice(&counter.to_be_bytes());
    MappingSeed {
        value: Digest::hash(&material),
        mode: SeedMode::PerInteraction,
        counter,
    }
}

/// The `k` chain digests `h_1 = H(seed)`, `h_{i+1} = H(h_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMapping {
    hashes: Vec<Digest>,
    seed: MappingSeed,
}

impl PairMapping {
    pub fn hashes(&self) -> &[Digest] {
        &self.hashes
    }

    pub fn k(&self) -> u16 {
        self.hashes.len() as u16
    }

    pub fn seed(&self) -> &MappingSeed {
        &self.seed
    }

    /// Hash evaluations spent deriving this mapping.
    pub fn hash_invocations(&self) -> u64 {
        self.hashes.len() as u64
    }
}

/// # Panics
///
/// Panics if `k` is zero.
pub fn derive_mapping(seed: MappingSeed, k: u16) -> PairMapping {
    assert!(k >= 1, "mapping needs at least one hash");
    let mut hashes = Vec::with_capacity(k as usize);
    let mut current = Digest::hash(seed.value.as_bytes());
    hashes.push(current);
    for _ in 1..k {
        current = Digest::hash(current.as_bytes());
        hashes.push(current);
    }
    PairMapping { hashes, seed }
}

/// `(low64(element XOR h_i)) mod m` for every chain digest. No hashing.
///
/// # Panics
///
/// Panics if `m` is zero.
#[inline]
pub fn dbf_indices(element: &Digest, mapping: &PairMapping, m: u32) -> Vec<u32> {
    assert!(m >= 1, "filter size must be non-zero");
    let low = element.low_u64();
    mapping
        .hashes
        .iter()
        .map(|h| ((low ^ h.low_u64()) % u64::from(m)) as u32)
        .collect()
}

/// Populates an `m`-bit filter from stored element digests under `mapping`.
/// The returned hash count is zero; the chain cost is carried by the mapping.
pub fn populate_dbf<'a, I>(elements: I, mapping: &PairMapping, m: u32) -> Populated
where
    I: IntoIterator<Item = &'a Digest>,
{
    let mut filter = BitFilter::new(m, mapping.k());
    for element in elements {
        filter.insert_indices(&dbf_indices(element, mapping, m));
    }
    Populated {
        filter,
        hash_invocations: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn low_byte_digest(b: u8) -> Digest {
        let mut bytes = [0u8; 32];
        bytes[31] = b;
        Digest(bytes)
    }

    #[test]
    fn pair_seed_is_symmetric_and_self_zero() {
        let a = Digest::node_id(1);
        let b = Digest::node_id(2);
        assert_eq!(pair_seed(&a, &b), pair_seed(&b, &a));
        assert!(pair_seed(&a, &a).value.is_zero());
        assert_eq!(pair_seed(&a, &b).mode, SeedMode::PairStatic);
        assert_eq!(pair_seed(&a, &b).counter, 0);
    }

    #[test]
    fn pair_seed_is_bitwise_xor() {
        let mut a = [0u8; 32];
        let mut b = [0u8; 32];
        a[0] = 0b1100_0000;
        b[0] = 0b1010_0000;
        assert_eq!(pair_seed(&Digest(a), &Digest(b)).value.0[0], 0b0110_0000);
    }

    #[test]
    fn interaction_seeds() {
        let a = Digest::node_id(5);
        let b = Digest::node_id(9);
        let s0 = interaction_seed(&a, &b, 0);
        let s1 = interaction_seed(&a, &b, 1);
        assert_ne!(s0.value, s1.value);
        assert_eq!(s0, interaction_seed(&b, &a, 0));
        assert_eq!(s1, interaction_seed(&a, &b, 1));
        assert_eq!(s1.mode, SeedMode::PerInteraction);
        assert_eq!(s1.counter, 1);
    }

    #[test]
    fn interaction_seed_matches_its_definition() {
        let a = Digest::node_id(5);
        let b = Digest::node_id(9);
        let mut material = (a ^ b).0.to_vec();
        material.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 7]);
        assert_eq!(interaction_seed(&a, &b, 7).value, Digest::hash(&material));
    }

    #[test]
    fn mapping_chain() {
        let seed = pair_seed(&Digest::node_id(1), &Digest::node_id(2));
        let one = derive_mapping(seed, 1);
        assert_eq!(one.hashes(), &[Digest::hash(seed.value.as_bytes())]);
        assert_eq!(one.hash_invocations(), 1);

        let three = derive_mapping(seed, 3);
        let five = derive_mapping(seed, 5);
        assert_eq!(three.hashes(), &five.hashes()[..3]);
        assert_eq!(five.hashes()[1], Digest::hash(five.hashes()[0].as_bytes()));
        assert_eq!(five.hash_invocations(), 5);
    }

    #[test]
    fn different_seeds_give_different_chains() {
        let s1 = pair_seed(&Digest::node_id(1), &Digest::node_id(2));
        let s2 = pair_seed(&Digest::node_id(1), &Digest::node_id(3));
        assert_ne!(
            derive_mapping(s1, 1).hashes()[0],
            derive_mapping(s2, 1).hashes()[0]
        );
    }

    #[test]
    fn xor_modulo_toy_vector() {
        let seed = pair_seed(&Digest::ZERO, &Digest::ZERO);
        let mapping = PairMapping {
            hashes: vec![low_byte_digest(0b0110_0001)],
            seed,
        };
        let element = low_byte_digest(0b1011_0010);
        // 0b11010011 = 211, 211 mod 16 = 3
        assert_eq!(dbf_indices(&element, &mapping, 16), vec![3]);
        assert_eq!(
            dbf_indices(&element, &mapping, 16),
            dbf_indices(&element, &mapping, 16)
        );
    }

    #[test]
    fn modulo_one_collapses_everything() {
        let mapping = derive_mapping(pair_seed(&Digest::node_id(1), &Digest::node_id(2)), 4);
        assert_eq!(
            dbf_indices(&Digest::hash(b"e"), &mapping, 1),
            vec![0, 0, 0, 0]
        );
    }

    #[test]
    fn populate_counts() {
        let mapping = derive_mapping(pair_seed(&Digest::node_id(1), &Digest::node_id(2)), 2);
        let empty = populate_dbf(std::iter::empty(), &mapping, 64);
        assert!(empty.filter.is_empty());

        // Find an element whose two indices differ.
        let element = (0u32..)
            .map(|i| Digest::hash(&i.to_be_bytes()))
            .find(|e| {
                let ix = dbf_indices(e, &mapping, 64);
                ix[0] != ix[1]
            })
            .unwrap();
        let one = populate_dbf([element].iter(), &mapping, 64);
        assert_eq!(one.filter.popcount(), 2);
        assert_eq!(mapping.hash_invocations() + one.hash_invocations, 2);
    }

    #[test]
    fn distinct_pairs_give_distinct_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let elements: Vec<Digest> = (0..1000).map(|_| Digest(rng.gen())).collect();
        let m1 = derive_mapping(pair_seed(&Digest::node_id(0), &Digest::node_id(1)), 1);
        let m2 = derive_mapping(pair_seed(&Digest::node_id(0), &Digest::node_id(2)), 1);
        let f1 = populate_dbf(elements.iter(), &m1, 1443).filter;
        let f2 = populate_dbf(elements.iter(), &m2, 1443).filter;
        assert_ne!(f1, f2);
    }

    #[test]
    fn coarse_uniformity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mapping = derive_mapping(pair_seed(&Digest::node_id(3), &Digest::node_id(4)), 1);
        let mut buckets = [0u32; 64];
        let total = 100_000;
        for _ in 0..total {
            let e = Digest(rng.gen());
            buckets[dbf_indices(&e, &mapping, 64)[0] as usize] += 1;
        }
        let mean = total as f64 / 64.0;
        for (i, &count) in buckets.iter().enumerate() {
            let dev = (f64::from(count) - mean).abs() / mean;
            assert!(dev <= 0.2, "bucket {i} has {count}");
        }
    }
}
