//! Binary message format.
//!
//! Every message starts with the magic `DBF1` and a one-byte type tag.
//! Integers are little-endian. The encoded length of a message is the
//! bandwidth it is charged in the simulator.
//!
//! ```text
//! FilterAnnounce (1): sender[32] mode[1] counter[8] m[4] k[2] n_sender[4] bits[ceil(m/8)]
//! IndexRequest   (2): count[4] index[4]*count
//! ElementTransfer(3): count[4] digest[32]*count
//! SizeProbe      (4): n[4]
//! ```
//!
//! Traces are a sequence of frames, each a `u32` little-endian length
//! followed by one encoded message.

use std::collections::HashSet;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::bloom::BitFilter;
use crate::digest::{Digest, DIGEST_LEN};

pub const MAGIC: [u8; 4] = *b"DBF1";

pub const TYPE_FILTER_ANNOUNCE: u8 = 1;
pub const TYPE_INDEX_REQUEST: u8 = 2;
pub const TYPE_ELEMENT_TRANSFER: u8 = 3;
pub const TYPE_SIZE_PROBE: u8 = 4;

/// Bytes before the bit array in a FilterAnnounce.
pub const ANNOUNCE_HEADER_LEN: usize = 4 + 1 + DIGEST_LEN + 1 + 8 + 4 + 2 + 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("bad magic")]
    BadMagic,
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("unknown mapping kind {0}")]
    UnknownMappingKind(u8),
    #[error("message truncated")]
    Truncated,
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
    #[error("invalid field: {0}")]
    InvalidField(&'static str),
}

/// Which mapping the announced filter was populated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingKind {
    /// Distributed filter, static per-pair seed.
    PairStatic = 0,
    /// Distributed filter, per-interaction counter seed.
    PerInteraction = 1,
    /// Standard filter with the global salt.
    Standard = 2,
}

impl MappingKind {
    fn from_byte(b: u8) -> Result<Self, WireError> {
        match b {
            0 => Ok(MappingKind::PairStatic),
            1 => Ok(MappingKind::PerInteraction),
            2 => Ok(MappingKind::Standard),
            other => Err(WireError::UnknownMappingKind(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterAnnounce {
    pub sender: Digest,
    pub kind: MappingKind,
    pub counter: u64,
    pub n_sender: u32,
    pub filter: BitFilter,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexRequest {
    /// Sorted, distinct.
    pub indices: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ElementTransfer {
    pub digests: Vec<Digest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeProbe {
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    FilterAnnounce(FilterAnnounce),
    IndexRequest(IndexRequest),
    ElementTransfer(ElementTransfer),
    SizeProbe(SizeProbe),
}

impl Message {
    pub fn type_tag(&self) -> u8 {
        match self {
            Message::FilterAnnounce(_) => TYPE_FILTER_ANNOUNCE,
            Message::IndexRequest(_) => TYPE_INDEX_REQUEST,
            Message::ElementTransfer(_) => TYPE_ELEMENT_TRANSFER,
            Message::SizeProbe(_) => TYPE_SIZE_PROBE,
        }
    }

    /// Length of the encoded form without encoding it.
    pub fn encoded_len(&self) -> usize {
        5 + match self {
            Message::FilterAnnounce(a) => ANNOUNCE_HEADER_LEN - 5 + a.filter.as_bytes().len(),
            Message::IndexRequest(r) => 4 + 4 * r.indices.len(),
            Message::ElementTransfer(t) => 4 + DIGEST_LEN * t.digests.len(),
            Message::SizeProbe(_) => 4,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(self.type_tag());
        match self {
            Message::FilterAnnounce(a) => {
                out.extend_from_slice(a.sender.as_bytes());
                out.push(a.kind as u8);
                out.extend_from_slice(&a.counter.to_le_bytes());
                out.extend_from_slice(&a.filter.m().to_le_bytes());
                out.extend_from_slice(&a.filter.k().to_le_bytes());
                out.extend_from_slice(&a.n_sender.to_le_bytes());
                out.extend_from_slice(a.filter.as_bytes());
            }
            Message::IndexRequest(r) => {
                out.extend_from_slice(&(r.indices.len() as u32).to_le_bytes());
                for i in &r.indices {
                    out.extend_from_slice(&i.to_le_bytes());
                }
            }
            Message::ElementTransfer(t) => {
                out.extend_from_slice(&(t.digests.len() as u32).to_le_bytes());
                for d in &t.digests {
                    out.extend_from_slice(d.as_bytes());
                }
            }
            Message::SizeProbe(p) => out.extend_from_slice(&p.n.to_le_bytes()),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Message, WireError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(WireError::BadMagic);
        }
        let msg = match r.u8()? {
            TYPE_FILTER_ANNOUNCE => {
                let sender = Digest(r.array()?);
                let kind = MappingKind::from_byte(r.u8()?)?;
                let counter = u64::from_le_bytes(r.array()?);
                let m = r.u32()?;
                let k = u16::from_le_bytes(r.array()?);
                let n_sender = r.u32()?;
                if m == 0 {
                    return Err(WireError::InvalidField("m"));
                }
                if k == 0 {
                    return Err(WireError::InvalidField("k"));
                }
                let bits = r.take((m as usize).div_ceil(8))?.to_vec();
                let filter = BitFilter::from_bytes(m, k, bits)
                    .map_err(|_| WireError::InvalidField("bit padding"))?;
                Message::FilterAnnounce(FilterAnnounce {
                    sender,
                    kind,
                    counter,
                    n_sender,
                    filter,
                })
            }
            TYPE_INDEX_REQUEST => {
                let count = r.count(4)?;
                let mut indices = Vec::with_capacity(count);
                for _ in 0..count {
                    let i = r.u32()?;
                    if indices.last().is_some_and(|&prev| prev >= i) {
                        return Err(WireError::InvalidField("indices not sorted and distinct"));
                    }
                    indices.push(i);
                }
                Message::IndexRequest(IndexRequest { indices })
            }
            TYPE_ELEMENT_TRANSFER => {
                let count = r.count(DIGEST_LEN)?;
                let mut seen = HashSet::with_capacity(count);
                let mut digests = Vec::with_capacity(count);
                for _ in 0..count {
                    let d = Digest(r.array()?);
                    if !seen.insert(d) {
                        return Err(WireError::InvalidField("duplicate digest"));
                    }
                    digests.push(d);
                }
                Message::ElementTransfer(ElementTransfer { digests })
            }
            TYPE_SIZE_PROBE => Message::SizeProbe(SizeProbe { n: r.u32()? }),
            other => return Err(WireError::UnknownType(other)),
        };
        match bytes.len() - r.pos {
            0 => Ok(msg),
            extra => Err(WireError::TrailingBytes(extra)),
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).ok_or(WireError::Truncated)?;
        let slice = self.bytes.get(self.pos..end).ok_or(WireError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.take(N)?.try_into().expect("slice length checked"))
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    /// Reads an item count and checks the remaining bytes can hold it.
    fn count(&mut self, item_len: usize) -> Result<usize, WireError> {
        let count = self.u32()? as usize;
        if count.saturating_mul(item_len) > self.bytes.len() - self.pos {
            return Err(WireError::Truncated);
        }
        Ok(count)
    }
}

/// Writes one length-prefixed trace frame.
pub fn write_frame<W: Write>(w: &mut W, encoded: &[u8]) -> io::Result<()> {
    w.write_all(&(encoded.len() as u32).to_le_bytes())?;
    w.write_all(encoded)
}

/// Reads every frame of a trace and decodes it.
pub fn read_frames<R: Read>(r: &mut R) -> io::Result<Vec<Message>> {
    let mut out = Vec::new();
    let mut len = [0u8; 4];
    loop {
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(out),
            Err(e) => return Err(e),
        }
        let mut buf = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut buf)?;
        let msg =
            Message::decode(&buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        out.push(msg);
    }
}
