use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("filter size m must be at least 1")]
    ZeroFilterSize,
    #[error("probe count k must be at least 1")]
    ZeroProbeCount,
    #[error("peer count must be at least 1")]
    ZeroPeers,
    #[error("target false positive rate {0} is outside (0, 1)")]
    InvalidFalsePositiveRate(f64),
    #[error("set size must be at least 1")]
    EmptySet,
    #[error("derived filter size {0} does not fit in 32 bits")]
    FilterTooLarge(u64),
    #[error("index {index} is out of range for a filter of {m} bits")]
    IndexOutOfRange { index: u32, m: u32 },
    #[error("filter shapes differ: m={own_m},k={own_k} vs m={other_m},k={other_k}")]
    ShapeMismatch {
        own_m: u32,
        own_k: u16,
        other_m: u32,
        other_k: u16,
    },
    #[error("bit array of {len} bytes does not match m={m}")]
    BitLength { len: usize, m: u32 },
    #[error("invalid simulation config: {0}")]
    Config(String),
}
