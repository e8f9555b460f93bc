//! 256-bit digests used as element, node and mapping identities.

use std::fmt;
use std::ops::BitXor;

use sha2::{Digest as _, Sha256};

pub const DIGEST_LEN: usize = 32;

/// A fixed-width 256-bit value. Bytes are read as a big-endian number, so
/// the "low" bits live at the end of the array.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0; DIGEST_LEN]);

    /// SHA-256 of `data`. This is the 256-bit digest function used for node
    /// ids, interaction seeds and mapping hash chains.
    pub fn hash(data: &[u8]) -> Digest {
        Digest(Sha256::digest(data).into())
    }

    /// Id of the simulator node with the given index.
    pub fn node_id(index: u64) -> Digest {
        Digest::hash(&index.to_be_bytes())
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    /// Low 64 bits of the big-endian value.
    #[inline]
    pub fn low_u64(&self) -> u64 {
        let mut word = [0u8; 8];
        word.copy_from_slice(&self.0[DIGEST_LEN - 8..]);
        u64::from_be_bytes(word)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; DIGEST_LEN]
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl BitXor for Digest {
    type Output = Digest;

    fn bitxor(self, rhs: Digest) -> Digest {
        let mut out = [0u8; DIGEST_LEN];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(rhs.0.iter())) {
            *o = a ^ b;
        }
        Digest(out)
    }
}

impl From<[u8; DIGEST_LEN]> for Digest {
    fn from(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..16])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            Digest::hash(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn low_bits_are_trailing_bytes() {
        let mut bytes = [0u8; DIGEST_LEN];
        bytes[31] = 0x01;
        bytes[24] = 0x80;
        bytes[23] = 0xff;
        assert_eq!(Digest(bytes).low_u64(), 0x8000_0000_0000_0001);
    }

    #[test]
    fn xor_is_self_inverse() {
        let a = Digest::hash(b"a");
        let b = Digest::hash(b"b");
        assert!((a ^ a).is_zero());
        assert_eq!(a ^ b ^ b, a);
    }
}
