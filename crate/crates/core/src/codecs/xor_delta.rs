//! Gorilla-style XOR coding of consecutive words.
//!
//! Words are read little-endian, so bit 63 of a double is the top bit of its
//! last stored byte. Stream layout:
//!
//! ```text
//! tag           u8     = 4
//! word_width    u8     2, 4 or 8
//! word_count    varint
//! bits          first word verbatim (8 * width bits), then per word:
//!   0                                      XOR with previous word is zero
//!   1 0 <payload>                          meaningful bits fit the previous
//!                                          window; payload uses its width
//!   1 1 <lead:6> <len-1:6> <payload:len>   new window
//! ```
//!
//! MSB first, zero padded to a byte.

use super::bits::{read_u8, read_varint, write_varint, BitReader, BitWriter};
use super::{expect_tag, Codec, CodecId, CodecParams};
use crate::error::{Error, Result};

pub struct XorDelta;

fn word(bytes: &[u8]) -> u64 {
    let mut le = [0u8; 8];
    le[..bytes.len()].copy_from_slice(bytes);
    u64::from_le_bytes(le)
}

fn compress_impl(params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
    let w = params.xor_word_width.bytes();
    if input.len() % w != 0 {
        return Err(Error::WidthMismatch {
            expected: w,
            actual: input.len() % w,
        });
    }
    let bits = (w * 8) as u32;
    let mut out = vec![CodecId::XOR_DELTA.0 as u8, w as u8];
    write_varint(&mut out, (input.len() / w) as u64);
    let mut words = input.chunks_exact(w).map(word);
    let Some(first) = words.next() else {
        return Ok(out);
    };
    let mut bw = BitWriter::new(out);
    bw.write(first, bits);
    let mut prev = first;
    // Previous window as (leading zeros, meaningful length); None until set.
    let mut window: Option<(u32, u32)> = None;
    for cur in words {
        let x = cur ^ prev;
        prev = cur;
        if x == 0 {
            bw.write_bit(false);
            continue;
        }
        bw.write_bit(true);
        let lead = x.leading_zeros() - (64 - bits);
        let trail = x.trailing_zeros();
        match window {
            Some((wl, wlen)) if lead >= wl && trail >= bits - wl - wlen => {
                bw.write_bit(false);
                bw.write(x >> (bits - wl - wlen), wlen);
            }
            _ => {
                let len = bits - lead - trail;
                bw.write_bit(true);
                bw.write(lead as u64, 6);
                bw.write((len - 1) as u64, 6);
                bw.write(x >> trail, len);
                window = Some((lead, len));
            }
        }
    }
    Ok(bw.finish())
}

fn decompress_impl(input: &[u8]) -> Result<Vec<u8>> {
    expect_tag(input, CodecId::XOR_DELTA)?;
    let mut pos = 1;
    let w = read_u8(input, &mut pos)? as usize;
    if !matches!(w, 2 | 4 | 8) {
        return Err(Error::corrupt(1, format!("bad word width {w}")));
    }
    let count = read_varint(input, &mut pos)? as usize;
    if count == 0 {
        if pos != input.len() {
            return Err(Error::corrupt(pos, "trailing data after stream"));
        }
        return Ok(Vec::new());
    }
    let bits = (w * 8) as u32;
    // First word is verbatim and every later word costs at least one bit.
    let available = (input.len() - pos) * 8;
    if available < bits as usize || count - 1 > available - bits as usize {
        return Err(Error::corrupt(pos, "payload too short for declared word count"));
    }
    let mut r = BitReader::new(&input[pos..], pos);
    let mut out = Vec::with_capacity(count * w);
    let mut prev = r.read(bits)?;
    out.extend_from_slice(&prev.to_le_bytes()[..w]);
    let mut window: Option<(u32, u32)> = None;
    for _ in 1..count {
        if r.read_bit()? {
            let x = if r.read_bit()? {
                let lead = r.read(6)? as u32;
                let len = r.read(6)? as u32 + 1;
                if lead + len > bits {
                    return Err(Error::corrupt(r.byte_offset(), "window exceeds word"));
                }
                window = Some((lead, len));
                r.read(len)? << (bits - lead - len)
            } else {
                let (wl, wlen) = window
                    .ok_or_else(|| Error::corrupt(pos, "window reuse before any window"))?;
                r.read(wlen)? << (bits - wl - wlen)
            };
            prev ^= x;
        }
        out.extend_from_slice(&prev.to_le_bytes()[..w]);
    }
    r.expect_end()?;
    Ok(out)
}

impl Codec for XorDelta {
    fn id(&self) -> CodecId {
        CodecId::XOR_DELTA
    }

    fn name(&self) -> &str {
        "xor_delta"
    }

    fn compress(&self, params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
        compress_impl(params, input)
    }

    fn decompress(&self, input: &[u8]) -> Result<Vec<u8>> {
        decompress_impl(input)
    }
}
