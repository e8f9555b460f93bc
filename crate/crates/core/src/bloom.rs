//! Standard bloom filter.
//!
//! Filters are plain `m`-bit arrays. Bit `i` lives in byte `i / 8` at bit
//! position `i % 8`, which is also the layout used on the wire, so a filter
//! can be transmitted without repacking.
//!
//! Index generation for the standard filter uses double hashing: two seeded
//! 64-bit hashes `h1`, `h2` of the element digest give
//! `index_i = (h1 + i * h2) mod m` for `i` in `0..k`.

use std::f64::consts::LN_2;

use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::digest::Digest;
use crate::error::{Error, Result};

/// Base-hash evaluations charged per element by the standard filter.
pub const STANDARD_HASHES_PER_ELEMENT: u64 = 2;

/// Name of the seeded 64-bit hash used for standard filter indices.
pub const STANDARD_HASH_NAME: &str = "xxh3-64";

/// Absolute slack allowed between a derived filter's exact rate and its target.
pub const FPR_SLACK: f64 = 0.01;

// Mixed into the salt for the second base hash so h1 and h2 are independent.
const SECOND_HASH_TWEAK: u64 = 0x9e37_79b9_7f4a_7c15;

/// Filter size, probe count and the false positive rate the pair was chosen for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    m: u32,
    k: u16,
    p_target: f64,
}

impl FilterParams {
    pub fn new(m: u32, k: u16, p_target: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroFilterSize);
        }
        if k == 0 {
            return Err(Error::ZeroProbeCount);
        }
        check_probability(p_target)?;
        Ok(FilterParams { m, k, p_target })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u16 {
        self.k
    }

    pub fn p_target(&self) -> f64 {
        self.p_target
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidFalsePositiveRate(p))
    }
}

/// False positive rate of an `m`-bit filter holding `n` elements with `k`
/// probes: `(1 - (1 - 1/m)^(k n))^k`.
pub fn fpr_exact(m: u32, k: u16, n: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::ZeroFilterSize);
    }
    if k == 0 {
        return Err(Error::ZeroProbeCount);
    }
    if n == 0 {
        return Ok(0.0);
    }
    let exponent = f64::from(k) * n as f64;
    // (1 - 1/m)^(kn) via ln_1p keeps precision for large m.
    let zero_bit = (exponent * (-1.0 / f64::from(m)).ln_1p()).exp();
    Ok((1.0 - zero_bit).powi(i32::from(k)))
}

/// Probability that none of `peers` differently mapped filters reveals a
/// missing element: `fpr_exact(m, k, n)^peers`.
pub fn network_miss_probability(m: u32, k: u16, n: u64, peers: u32) -> Result<f64> {
    if peers == 0 {
        return Err(Error::ZeroPeers);
    }
    let fpr = fpr_exact(m, k, n)?;
    Ok(fpr.powi(peers as i32))
}

/// Chooses `m` and `k` for `n` elements at false positive rate `p_target`.
///
/// `m = ceil(-n ln p / ln^2 2)` and `k = max(1, round(m/n ln 2))`. For very
/// small `n` the asymptotic sizing can overshoot the target, in which case `m`
/// is grown until `fpr_exact` is within 0.01 of it.
pub fn derive_params(n: u64, p_target: f64) -> Result<FilterParams> {
    if n == 0 {
        return Err(Error::EmptySet);
    }
    check_probability(p_target)?;
    let m = (-(n as f64) * p_target.ln() / (LN_2 * LN_2)).ceil();
    if m > f64::from(u32::MAX) {
        return Err(Error::FilterTooLarge(m as u64));
    }
    let mut m = (m as u32).max(1);
    let k = ((f64::from(m) / n as f64) * LN_2)
        .round()
        .clamp(1.0, f64::from(u16::MAX)) as u16;
    while fpr_exact(m, k, n)? > p_target + FPR_SLACK {
        m = m
            .checked_add(1)
            .ok_or(Error::FilterTooLarge(u64::from(m) + 1))?;
    }
    FilterParams::new(m, k, p_target)
}

/// A seedable 64-bit hash over byte strings.
pub trait SeededHash64 {
    fn hash64(&self, data: &[u8], seed: u64) -> u64;
}

/// XXH3 64-bit, the default standard filter hash.
#[derive(Debug, Clone, Copy, Default)]
pub struct Xxh3;

impl SeededHash64 for Xxh3 {
    #[inline]
    fn hash64(&self, data: &[u8], seed: u64) -> u64 {
        xxh3_64_with_seed(data, seed)
    }
}

/// Standard filter indices of `element` using the default hash.
pub fn standard_indices(element: &Digest, m: u32, k: u16, salt: u64) -> Vec<u32> {
    standard_indices_with(&Xxh3, element, m, k, salt)
}

pub fn standard_indices_with<H: SeededHash64>(
    hasher: &H,
    element: &Digest,
    m: u32,
    k: u16,
    salt: u64,
) -> Vec<u32> {
    let h1 = hasher.hash64(element.as_bytes(), salt);
    let h2 = hasher.hash64(element.as_bytes(), salt ^ SECOND_HASH_TWEAK);
    double_hash_indices(h1, h2, m, k)
}

#[inline]
fn double_hash_indices(h1: u64, h2: u64, m: u32, k: u16) -> Vec<u32> {
    let m = u128::from(m);
    (0..u128::from(k))
        .map(|i| ((u128::from(h1) + i * u128::from(h2)) % m) as u32)
        .collect()
}

/// A freshly populated filter together with the number of base-hash
/// evaluations it cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Populated {
    pub filter: BitFilter,
    pub hash_invocations: u64,
}

/// Builds a standard filter over `elements`.
pub fn populate_standard<'a, I>(elements: I, params: &FilterParams, salt: u64) -> Populated
where
    I: IntoIterator<Item = &'a Digest>,
{
    populate_standard_with(&Xxh3, elements, params, salt)
}

pub fn populate_standard_with<'a, H, I>(
    hasher: &H,
    elements: I,
    params: &FilterParams,
    salt: u64,
) -> Populated
where
    H: SeededHash64,
    I: IntoIterator<Item = &'a Digest>,
{
    let mut filter = BitFilter::new(params.m(), params.k());
    let mut hash_invocations = 0;
    for element in elements {
        let indices = standard_indices_with(hasher, element, params.m(), params.k(), salt);
        filter.insert_indices(&indices);
        hash_invocations += STANDARD_HASHES_PER_ELEMENT;
    }
    Populated {
        filter,
        hash_invocations,
    }
}

/// An `m`-bit array tagged with the probe count it was populated with.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitFilter {
    m: u32,
    k: u16,
    bits: Vec<u8>,
}

impl BitFilter {
    /// An all-zero filter.
    ///
    /// # Panics
    ///
    /// Panics if `m` or `k` is zero.
    pub fn new(m: u32, k: u16) -> Self {
        assert!(m >= 1 && k >= 1, "filter shape must be non-empty");
        BitFilter {
            m,
            k,
            bits: vec![0; byte_len(m)],
        }
    }

    pub fn with_params(params: &FilterParams) -> Self {
        Self::new(params.m(), params.k())
    }

    /// Rebuilds a filter from its packed bytes. Padding bits past `m` must be zero.
    pub fn from_bytes(m: u32, k: u16, bits: Vec<u8>) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroFilterSize);
        }
        if k == 0 {
            return Err(Error::ZeroProbeCount);
        }
        if bits.len() != byte_len(m) {
            return Err(Error::BitLength { len: bits.len(), m });
        }
        let tail = m % 8;
        if tail != 0 && bits[bits.len() - 1] >> tail != 0 {
            return Err(Error::BitLength { len: bits.len(), m });
        }
        Ok(BitFilter { m, k, bits })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u16 {
        self.k
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    /// # Panics
    ///
    /// Panics if `index >= m`.
    #[inline]
    pub fn get(&self, index: u32) -> bool {
        assert!(
            index < self.m,
            "index {index} out of range for m={}",
            self.m
        );
        self.bits[(index / 8) as usize] >> (index % 8) & 1 == 1
    }

    /// # Panics
    ///
    /// Panics if `index >= m`.
    #[inline]
    pub fn set(&mut self, index: u32) {
        assert!(
            index < self.m,
            "index {index} out of range for m={}",
            self.m
        );
        self.bits[(index / 8) as usize] |= 1 << (index % 8);
    }

    pub fn insert_indices(&mut self, indices: &[u32]) {
        for &i in indices {
            self.set(i);
        }
    }

    /// True iff every listed bit is set.
    pub fn contains(&self, indices: &[u32]) -> Result<bool> {
        if let Some(&index) = indices.iter().find(|&&i| i >= self.m) {
            return Err(Error::IndexOutOfRange { index, m: self.m });
        }
        Ok(indices.iter().all(|&i| self.get(i)))
    }

    pub fn popcount(&self) -> u32 {
        self.bits.iter().map(|b| b.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.m).filter(move |&i| self.get(i))
    }
}

impl std::fmt::Debug for BitFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitFilter")
            .field("m", &self.m)
            .field("k", &self.k)
            .field("ones", &self.popcount())
            .finish()
    }
}

#[inline]
fn byte_len(m: u32) -> usize {
    (m as usize).div_ceil(8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_digests(rng: &mut ChaCha8Rng, count: usize) -> Vec<Digest> {
        (0..count).map(|_| Digest(rng.gen())).collect()
    }

    #[test]
    fn fpr_examples() {
        assert_eq!(fpr_exact(10, 3, 0).unwrap(), 0.0);
        // (1 - 0.9^6)^3
        let direct = (1.0f64 - 0.9f64.powi(6)).powi(3);
        assert!((fpr_exact(10, 3, 2).unwrap() - direct).abs() < 1e-12);
        assert!((fpr_exact(10, 3, 2).unwrap() - 0.102_870_974_146).abs() < 1e-9);
        assert!((fpr_exact(1443, 1, 1000).unwrap() - 0.50).abs() < 0.005);
    }

    #[test]
    fn fpr_rejects_degenerate_shapes() {
        assert_eq!(fpr_exact(0, 3, 1), Err(Error::ZeroFilterSize));
        assert_eq!(fpr_exact(10, 0, 1), Err(Error::ZeroProbeCount));
    }

    #[test]
    fn single_bit_filter_is_saturated_by_one_element() {
        assert_eq!(fpr_exact(1, 1, 1).unwrap(), 1.0);
        assert_eq!(fpr_exact(1, 4, 0).unwrap(), 0.0);
    }

    #[test]
    fn network_miss_examples() {
        for (m, k, n) in [(10, 3, 2), (1443, 1, 1000), (64, 2, 7)] {
            assert_eq!(
                network_miss_probability(m, k, n, 1).unwrap(),
                fpr_exact(m, k, n).unwrap()
            );
        }
        assert!((network_miss_probability(1443, 1, 1000, 3).unwrap() - 0.125).abs() < 1e-3);
        assert_eq!(network_miss_probability(10, 3, 0, 5).unwrap(), 0.0);
        assert_eq!(network_miss_probability(10, 3, 2, 0), Err(Error::ZeroPeers));
    }

    #[test]
    fn derive_params_examples() {
        let p = derive_params(1000, 0.5).unwrap();
        assert_eq!((p.m(), p.k()), (1443, 1));
        let p = derive_params(1, 0.5).unwrap();
        assert_eq!((p.m(), p.k()), (2, 1));
        let p = derive_params(100, 0.01).unwrap();
        assert_eq!((p.m(), p.k()), (959, 7));
    }

    #[test]
    fn derive_params_grows_tiny_filters() {
        // closed form gives m=3 (fpr 0.556) and m=5,k=3 (fpr 0.116)
        let p = derive_params(2, 0.5).unwrap();
        assert_eq!((p.m(), p.k()), (4, 1));
        let p = derive_params(1, 0.1).unwrap();
        assert_eq!(p.k(), 3);
        assert!(p.m() > 5);
    }

    #[test]
    fn derive_params_rejects_bad_inputs() {
        for p in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                derive_params(10, p),
                Err(Error::InvalidFalsePositiveRate(_))
            ));
        }
        assert_eq!(derive_params(0, 0.5), Err(Error::EmptySet));
    }

    #[test]
    fn derive_params_meets_target() {
        for n in [1u64, 2, 3, 10, 50, 199, 200, 1000, 12_345] {
            for p in [0.5, 0.3, 0.1, 0.01, 0.001] {
                let params = derive_params(n, p).unwrap();
                let fpr = fpr_exact(params.m(), params.k(), n).unwrap();
                assert!(fpr <= p + 0.01, "n={n} p={p} fpr={fpr}");
            }
        }
    }

    struct PinnedHash {
        h1: u64,
        h2: u64,
    }

    impl SeededHash64 for PinnedHash {
        fn hash64(&self, _data: &[u8], seed: u64) -> u64 {
            if seed == 0 {
                self.h1
            } else {
                self.h2
            }
        }
    }

    #[test]
    fn double_hashing_reproduces_worked_vector() {
        // h1 = 11, h2 = 7 over m = 12 gives {11, 6, 1}.
        let hasher = PinnedHash { h1: 11, h2: 7 };
        let y = Digest::hash(b"Y");
        assert_eq!(standard_indices_with(&hasher, &y, 12, 3, 0), vec![11, 6, 1]);
    }

    #[test]
    fn worked_two_element_filter() {
        let mut filter = BitFilter::new(12, 3);
        filter.insert_indices(&[11, 6, 1]);
        filter.insert_indices(&[5, 2, 9]);
        let ones: Vec<u32> = filter.iter_ones().collect();
        assert_eq!(ones, vec![1, 2, 5, 6, 9, 11]);
        assert!(filter.contains(&[11, 6, 1]).unwrap());
        // X was never inserted but all of its bits are set.
        assert!(filter.contains(&[1, 5, 2]).unwrap());
        assert!(!filter.contains(&[0, 5, 2]).unwrap());
    }

    #[test]
    fn contains_rejects_out_of_range() {
        let filter = BitFilter::new(12, 3);
        assert_eq!(
            filter.contains(&[1, 12]),
            Err(Error::IndexOutOfRange { index: 12, m: 12 })
        );
    }

    #[test]
    fn empty_filter_contains_nothing() {
        let params = derive_params(100, 0.1).unwrap();
        let populated = populate_standard(std::iter::empty(), &params, 7);
        assert!(populated.filter.is_empty());
        assert_eq!(populated.hash_invocations, 0);
        let probe = standard_indices(&Digest::hash(b"q"), params.m(), params.k(), 7);
        assert!(!populated.filter.contains(&probe).unwrap());
    }

    #[test]
    fn indices_are_deterministic_and_in_range() {
        let element = Digest::hash(b"element");
        let a = standard_indices(&element, 1443, 1, 42);
        assert_eq!(a.len(), 1);
        assert!(a[0] < 1443);
        assert_eq!(a, standard_indices(&element, 1443, 1, 42));
        let b = standard_indices(&element, 97, 5, 42);
        assert_eq!(b.len(), 5);
        assert!(b.iter().all(|&i| i < 97));
    }

    #[test]
    fn insertion_is_idempotent_and_charges_two_hashes() {
        let params = derive_params(10, 0.1).unwrap();
        let x = Digest::hash(b"x");
        let once = populate_standard([x].iter(), &params, 1);
        let twice = populate_standard([x, x].iter(), &params, 1);
        assert_eq!(once.filter, twice.filter);
        assert_eq!(once.hash_invocations, 2);
        assert_eq!(twice.hash_invocations, 4);
    }

    #[test]
    fn popcount_bounded_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = derive_params(200, 0.05).unwrap();
        let elements = random_digests(&mut rng, 200);
        let mut filter = BitFilter::with_params(&params);
        let mut last = 0;
        for (n, e) in elements.iter().enumerate() {
            filter.insert_indices(&standard_indices(e, params.m(), params.k(), 9));
            let ones = filter.popcount();
            assert!(ones >= last);
            assert!(ones as usize <= params.k() as usize * (n + 1));
            last = ones;
        }
    }

    #[test]
    fn empirical_fpr_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1000;
        let params = derive_params(n, 0.5).unwrap();
        let members = random_digests(&mut rng, n as usize);
        let filter = populate_standard(members.iter(), &params, 5).filter;
        let queries = random_digests(&mut rng, 10_000);
        let hits = queries
            .iter()
            .filter(|q| {
                filter
                    .contains(&standard_indices(q, params.m(), params.k(), 5))
                    .unwrap()
            })
            .count();
        let observed = hits as f64 / queries.len() as f64;
        let expected = fpr_exact(params.m(), params.k(), n).unwrap();
        assert!(
            (observed - expected).abs() <= 0.03,
            "{observed} vs {expected}"
        );
    }

    #[test]
    fn from_bytes_checks_length_and_padding() {
        assert!(BitFilter::from_bytes(10, 1, vec![0xff, 0x03]).is_ok());
        assert!(BitFilter::from_bytes(10, 1, vec![0xff, 0x04]).is_err());
        assert!(BitFilter::from_bytes(10, 1, vec![0xff]).is_err());
        assert!(BitFilter::from_bytes(16, 1, vec![0xff, 0xff]).is_ok());
    }
}
