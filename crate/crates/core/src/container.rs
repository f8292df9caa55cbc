//! The on-disk artifact: header, clustering plan, per-(block, cluster)
//! offset table, remainder tail and payload. All integers little-endian.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "TDT1"
//! 4       1           version (1)
//! 5       2           codec id
//! 7       1           word width in bytes
//! 8       1           packing (0 same_byte, 1 same_value)
//! 9       4           block size in bytes
//! 13      8           value count
//! 21      1 + n       plan: cluster count, then cluster index of positions 1..n
//! 22+n    4           block count
//! 26+n    8 * B * k   offset table, block-major: stream length u32 (MSB set
//!                     when the stream was stored raw), CRC-32 of the stream
//! ...     2 + r       tail: remainder byte count, remainder bytes
//! ...                 payload: streams in (block, cluster) order
//! ```

use crate::codecs::CodecId;
use crate::error::{Error, Result};
use crate::typed::{ClusteringPlan, FloatWidth, Packing};

pub const MAGIC: [u8; 4] = *b"TDT1";
pub const VERSION: u8 = 1;
pub const STORED_FLAG: u32 = 1 << 31;
pub const MAX_STREAM_LEN: usize = (STORED_FLAG - 1) as usize;

/// Size of everything before the offset table for word width `n`.
pub const fn fixed_header_len(n: usize) -> usize {
    4 + 1 + 2 + 1 + 1 + 4 + 8 + 1 + n + 4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamEntry {
    /// Compressed length in bytes, flag stripped.
    pub len: u32,
    /// The stream holds a store-codec frame rather than the container codec.
    pub stored: bool,
    pub crc: u32,
}

impl StreamEntry {
    pub fn for_stream(stream: &[u8], stored: bool) -> Result<Self> {
        if stream.len() > MAX_STREAM_LEN {
            return Err(Error::InvalidConfig(format!(
                "compressed stream of {} bytes exceeds the 2 GiB limit",
                stream.len()
            )));
        }
        Ok(StreamEntry {
            len: stream.len() as u32,
            stored,
            crc: crc32fast::hash(stream),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub codec: CodecId,
    pub plan: ClusteringPlan,
    pub block_size: u32,
    pub value_count: u64,
    pub block_count: u32,
    /// Block-major: entry `b * k + c` describes cluster `c` of block `b`.
    pub entries: Vec<StreamEntry>,
    /// Bytes past the last whole word, kept verbatim.
    pub tail: Vec<u8>,
    pub payload: Vec<u8>,
    offsets: Vec<usize>,
}

impl Container {
    pub fn new(
        codec: CodecId,
        plan: ClusteringPlan,
        block_size: u32,
        value_count: u64,
        streams: Vec<(Vec<u8>, bool)>,
        tail: Vec<u8>,
    ) -> Result<Self> {
        if tail.len() > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!("tail of {} bytes is too long", tail.len())));
        }
        let mut entries = Vec::with_capacity(streams.len());
        let mut payload = Vec::with_capacity(streams.iter().map(|s| s.0.len()).sum());
        for (s, stored) in &streams {
            entries.push(StreamEntry::for_stream(s, *stored)?);
            payload.extend_from_slice(s);
        }
        Self::from_parts(codec, plan, block_size, value_count, entries, payload, tail)
    }

    /// Assembles a container from a prebuilt offset table and payload.
    pub fn from_parts(
        codec: CodecId,
        plan: ClusteringPlan,
        block_size: u32,
        value_count: u64,
        entries: Vec<StreamEntry>,
        payload: Vec<u8>,
        tail: Vec<u8>,
    ) -> Result<Self> {
        let k = plan.k();
        if entries.len() % k != 0 {
            return Err(Error::InconsistentLengths(format!(
                "{} streams is not a multiple of {k} clusters",
                entries.len()
            )));
        }
        let offsets = prefix_offsets(&entries);
        if *offsets.last().unwrap() != payload.len() {
            return Err(Error::InconsistentLengths(format!(
                "offset table describes {} bytes, payload has {}",
                offsets.last().unwrap(),
                payload.len()
            )));
        }
        Ok(Container {
            codec,
            plan,
            block_size,
            value_count,
            block_count: (entries.len() / k) as u32,
            entries,
            tail,
            payload,
            offsets,
        })
    }

    pub fn width(&self) -> FloatWidth {
        self.plan.width()
    }

    pub fn packing(&self) -> Packing {
        self.plan.packing()
    }

    pub fn header_len(&self) -> usize {
        fixed_header_len(self.width().bytes()) + 8 * self.entries.len() + 2 + self.tail.len()
    }

    pub fn total_len(&self) -> usize {
        self.header_len() + self.payload.len()
    }

    /// Everything but the payload, in bytes.
    pub fn metadata_len(&self) -> usize {
        self.header_len() - self.tail.len()
    }

    /// Number of values in block `b`.
    pub fn block_values(&self, b: usize) -> usize {
        let per_block = self.block_size as usize / self.width().bytes();
        let start = b * per_block;
        (self.value_count as usize - start).min(per_block)
    }

    /// The stream and its entry for cluster `c` of block `b`.
    pub fn stream(&self, b: usize, c: usize) -> (&[u8], StreamEntry) {
        let i = b * self.plan.k() + c;
        (&self.payload[self.offsets[i]..self.offsets[i + 1]], self.entries[i])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.total_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.codec.0.to_le_bytes());
        out.push(self.width().bytes() as u8);
        out.push(self.packing().code());
        out.extend_from_slice(&self.block_size.to_le_bytes());
        out.extend_from_slice(&self.value_count.to_le_bytes());
        out.extend_from_slice(&self.plan.encode());
        out.extend_from_slice(&self.block_count.to_le_bytes());
        for e in &self.entries {
            let len = e.len | if e.stored { STORED_FLAG } else { 0 };
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(&e.crc.to_le_bytes());
        }
        out.extend_from_slice(&(self.tail.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.tail);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses and structurally validates a container. Stream contents are
    /// checked later, when they are decompressed.
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader { data, pos: 0 };
        if data.len() < 4 || data[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        r.pos = 4;
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let codec = CodecId(r.u16()?);
        let width_at = r.pos;
        let width = FloatWidth::try_from(r.u8()?).map_err(|_| Error::corrupt(width_at, "bad word width"))?;
        let packing_at = r.pos;
        let packing = Packing::from_code(r.u8()?).ok_or_else(|| Error::corrupt(packing_at, "bad packing code"))?;
        let block_size = r.u32()?;
        let value_count = r.u64()?;
        let plan_at = r.pos;
        let plan_bytes = r.take(1 + width.bytes())?;
        let plan = ClusteringPlan::decode(width, packing, plan_bytes)
            .map_err(|e| Error::corrupt(plan_at, e.to_string()))?;
        let count_at = r.pos;
        let block_count = r.u32()?;

        let n = width.bytes() as u64;
        if block_size == 0 || block_size as u64 % n != 0 {
            return Err(Error::corrupt(9, format!("block size {block_size} is not a positive multiple of {n}")));
        }
        let expected_blocks = value_count
            .checked_mul(n)
            .ok_or_else(|| Error::corrupt(13, "value count overflows"))?
            .div_ceil(block_size as u64);
        if expected_blocks != block_count as u64 {
            return Err(Error::corrupt(
                count_at,
                format!("block count {block_count} does not match {expected_blocks} implied by the header"),
            ));
        }
        let stream_count = block_count as usize * plan.k();
        let table = r.take(
            stream_count
                .checked_mul(8)
                .ok_or_else(|| Error::corrupt(count_at, "offset table too large"))?,
        )?;
        let entries: Vec<StreamEntry> = table
            .chunks_exact(8)
            .map(|e| {
                let raw = u32::from_le_bytes(e[..4].try_into().unwrap());
                StreamEntry {
                    len: raw & !STORED_FLAG,
                    stored: raw & STORED_FLAG != 0,
                    crc: u32::from_le_bytes(e[4..].try_into().unwrap()),
                }
            })
            .collect();
        let tail_len = r.u16()? as usize;
        if tail_len >= width.bytes() {
            return Err(Error::corrupt(r.pos - 2, format!("tail of {tail_len} bytes is not a partial word")));
        }
        let tail = r.take(tail_len)?.to_vec();
        let offsets = prefix_offsets(&entries);
        let payload = &data[r.pos..];
        let expected = *offsets.last().unwrap();
        if payload.len() != expected {
            return Err(Error::corrupt(
                r.pos,
                format!("payload is {} bytes, offset table describes {expected}", payload.len()),
            ));
        }
        Ok(Container {
            codec,
            plan,
            block_size,
            value_count,
            block_count,
            entries,
            tail,
            payload: payload.to_vec(),
            offsets,
        })
    }
}

fn prefix_offsets(entries: &[StreamEntry]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(entries.len() + 1);
    let mut at = 0usize;
    offsets.push(0);
    for e in entries {
        at += e.len as usize;
        offsets.push(at);
    }
    offsets
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        match end {
            Some(end) => {
                let s = &self.data[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::corrupt(self.pos, "container truncated")),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
