//! Canonical Huffman coding over bytes, code lengths capped at 15.
//!
//! Stream layout:
//!
//! ```text
//! tag            u8      = 3
//! original_len   varint  (stream ends here when 0)
//! table_kind     u8      1 = single symbol, 2 = sparse, 3 = dense
//!   single       symbol u8; no payload follows
//!   sparse       used_symbols - 1 u8, then (symbol u8, length u8) pairs
//!   dense        128 bytes of 4-bit lengths, symbol 2i in the high nibble
//! payload        canonical codes, MSB first, zero padded to a byte
//! ```
//!
//! Codes are assigned canonically: shorter codes first, ties by symbol value.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::bits::{read_u8, read_varint, write_varint, BitReader, BitWriter};
use super::{expect_tag, Codec, CodecId, CodecParams};
use crate::error::{Error, Result};
use crate::features::histogram;

pub const MAX_CODE_LEN: u8 = 15;

const SINGLE: u8 = 1;
const SPARSE: u8 = 2;
const DENSE: u8 = 3;
const SPARSE_LIMIT: usize = 63;

pub struct Huffman;

/// Largest header (everything before the payload) for an `n`-byte input.
pub fn max_header_len(n: usize) -> usize {
    let mut varint = Vec::new();
    write_varint(&mut varint, n as u64);
    1 + varint.len() + 1 + (2 + 2 * SPARSE_LIMIT).max(128)
}

/// Optimal prefix-code lengths for `counts` (0 for absent symbols), without
/// a length limit. Ties in the merge order resolve by node id.
pub fn huffman_lengths(counts: &[u64; 256]) -> [u8; 256] {
    let mut lengths = [0u8; 256];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| Reverse((c, s)))
        .collect();
    if heap.len() == 1 {
        let Reverse((_, s)) = heap.pop().unwrap();
        lengths[s] = 1;
        return lengths;
    }
    let mut parent = vec![usize::MAX; 512];
    let mut next_id = 256;
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        parent[a] = next_id;
        parent[b] = next_id;
        heap.push(Reverse((wa + wb, next_id)));
        next_id += 1;
    }
    for s in 0..256 {
        if counts[s] == 0 {
            continue;
        }
        let mut depth = 0u8;
        let mut node = s;
        while parent[node] != usize::MAX {
            node = parent[node];
            depth += 1;
        }
        lengths[s] = depth;
    }
    lengths
}

/// Optimal code lengths subject to `limit`, via package-merge.
pub fn package_merge_lengths(counts: &[u64; 256], limit: u8) -> [u8; 256] {
    let mut leaves: Vec<(u64, usize)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| (c, s))
        .collect();
    let mut lengths = [0u8; 256];
    if leaves.len() <= 1 {
        if let Some(&(_, s)) = leaves.first() {
            lengths[s] = 1;
        }
        return lengths;
    }
    assert!(leaves.len() <= 1 << limit, "alphabet does not fit under the length limit");
    leaves.sort_unstable();

    // Each item is (weight, multiset of leaves as per-symbol counts).
    type Item = (u64, Vec<u8>);
    let leaf_items: Vec<Item> = leaves
        .iter()
        .map(|&(w, s)| {
            let mut m = vec![0u8; 256];
            m[s] = 1;
            (w, m)
        })
        .collect();
    let mut list = leaf_items.clone();
    for _ in 1..limit {
        let packages: Vec<Item> = list
            .chunks_exact(2)
            .map(|pair| {
                let m = pair[0].1.iter().zip(&pair[1].1).map(|(a, b)| a + b).collect();
                (pair[0].0 + pair[1].0, m)
            })
            .collect();
        let mut merged = Vec::with_capacity(leaf_items.len() + packages.len());
        let (mut i, mut j) = (0, 0);
        while i < leaf_items.len() || j < packages.len() {
            let take_leaf = j >= packages.len() || (i < leaf_items.len() && leaf_items[i].0 <= packages[j].0);
            if take_leaf {
                merged.push(leaf_items[i].clone());
                i += 1;
            } else {
                merged.push(packages[j].clone());
                j += 1;
            }
        }
        list = merged;
    }
    for (_, m) in &list[..2 * leaves.len() - 2] {
        for (s, &c) in m.iter().enumerate() {
            lengths[s] += c;
        }
    }
    lengths
}

/// Code lengths for `counts`, falling back to package-merge when the plain
/// Huffman tree is deeper than [`MAX_CODE_LEN`].
pub fn code_lengths(counts: &[u64; 256]) -> [u8; 256] {
    let lengths = huffman_lengths(counts);
    if lengths.iter().any(|&l| l > MAX_CODE_LEN) {
        package_merge_lengths(counts, MAX_CODE_LEN)
    } else {
        lengths
    }
}

/// Canonical codes for `lengths`.
pub fn canonical_codes(lengths: &[u8; 256]) -> [u32; 256] {
    let mut codes = [0u32; 256];
    let mut order: Vec<usize> = (0..256).filter(|&s| lengths[s] > 0).collect();
    order.sort_by_key(|&s| (lengths[s], s));
    let mut code = 0u32;
    let mut prev_len = 0u8;
    for &s in &order {
        code <<= lengths[s] - prev_len;
        codes[s] = code;
        code += 1;
        prev_len = lengths[s];
    }
    codes
}

fn compress_impl(input: &[u8]) -> Vec<u8> {
    let mut out = vec![CodecId::HUFFMAN.0 as u8];
    write_varint(&mut out, input.len() as u64);
    if input.is_empty() {
        return out;
    }
    let counts = histogram(input);
    let used: Vec<usize> = (0..256).filter(|&s| counts[s] > 0).collect();
    if used.len() == 1 {
        out.push(SINGLE);
        out.push(used[0] as u8);
        return out;
    }
    let lengths = code_lengths(&counts);
    if used.len() <= SPARSE_LIMIT {
        out.push(SPARSE);
        out.push((used.len() - 1) as u8);
        for &s in &used {
            out.push(s as u8);
            out.push(lengths[s]);
        }
    } else {
        out.push(DENSE);
        out.extend(lengths.chunks_exact(2).map(|p| (p[0] << 4) | p[1]));
    }
    let codes = canonical_codes(&lengths);
    let mut w = BitWriter::new(out);
    for &b in input {
        w.write(codes[b as usize] as u64, lengths[b as usize] as u32);
    }
    w.finish()
}

/// Payload size in bits for `input` under its own code, excluding the header.
pub fn payload_bits(input: &[u8]) -> u64 {
    let counts = histogram(input);
    if counts.iter().filter(|&&c| c > 0).count() <= 1 {
        return 0;
    }
    let lengths = code_lengths(&counts);
    counts.iter().zip(&lengths).map(|(&c, &l)| c * l as u64).sum()
}

struct DecodeTable {
    /// Indexed by the next `max_len` bits: (symbol, code length), length 0
    /// for bit patterns no code covers.
    entries: Vec<(u8, u8)>,
    max_len: u8,
}

impl DecodeTable {
    fn new(lengths: &[u8; 256], at: usize) -> Result<Self> {
        let max_len = lengths.iter().copied().max().unwrap_or(0);
        if max_len == 0 || max_len > MAX_CODE_LEN {
            return Err(Error::corrupt(at, "invalid code lengths"));
        }
        let kraft: u64 = lengths
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| 1u64 << (max_len - l))
            .sum();
        if kraft > 1u64 << max_len {
            return Err(Error::corrupt(at, "code lengths oversubscribe the code space"));
        }
        let codes = canonical_codes(lengths);
        let mut entries = vec![(0u8, 0u8); 1 << max_len];
        for s in 0..256 {
            let l = lengths[s];
            if l == 0 {
                continue;
            }
            let shift = max_len - l;
            let start = (codes[s] as usize) << shift;
            for e in &mut entries[start..start + (1 << shift)] {
                *e = (s as u8, l);
            }
        }
        Ok(DecodeTable { entries, max_len })
    }
}

fn decompress_impl(input: &[u8]) -> Result<Vec<u8>> {
    expect_tag(input, CodecId::HUFFMAN)?;
    let mut pos = 1;
    let len = read_varint(input, &mut pos)? as usize;
    if len == 0 {
        if pos != input.len() {
            return Err(Error::corrupt(pos, "trailing data after stream"));
        }
        return Ok(Vec::new());
    }
    let kind_at = pos;
    let mut lengths = [0u8; 256];
    match read_u8(input, &mut pos)? {
        SINGLE => {
            let s = read_u8(input, &mut pos)?;
            if pos != input.len() {
                return Err(Error::corrupt(pos, "trailing data after stream"));
            }
            return Ok(vec![s; len]);
        }
        SPARSE => {
            let used = read_u8(input, &mut pos)? as usize + 1;
            for _ in 0..used {
                let s = read_u8(input, &mut pos)? as usize;
                let l = read_u8(input, &mut pos)?;
                if lengths[s] != 0 || l == 0 {
                    return Err(Error::corrupt(pos - 2, "bad sparse code table"));
                }
                lengths[s] = l;
            }
        }
        DENSE => {
            let table = input
                .get(pos..pos + 128)
                .ok_or_else(|| Error::corrupt(pos, "truncated code table"))?;
            for (i, &b) in table.iter().enumerate() {
                lengths[2 * i] = b >> 4;
                lengths[2 * i + 1] = b & 0x0F;
            }
            pos += 128;
        }
        other => return Err(Error::corrupt(kind_at, format!("unknown table kind {other}"))),
    }
    let table = DecodeTable::new(&lengths, kind_at)?;
    // Each symbol costs at least one bit.
    if len > (input.len() - pos) * 8 {
        return Err(Error::corrupt(pos, "payload too short for declared length"));
    }
    let mut r = BitReader::new(&input[pos..], pos);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let (s, l) = table.entries[r.peek(table.max_len as u32) as usize];
        if l == 0 {
            return Err(Error::corrupt(r.byte_offset(), "invalid code"));
        }
        r.consume(l as u32)?;
        out.push(s);
    }
    r.expect_end()?;
    Ok(out)
}

impl Codec for Huffman {
    fn id(&self) -> CodecId {
        CodecId::HUFFMAN
    }

    fn name(&self) -> &str {
        "huffman"
    }

    fn compress(&self, _params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
        Ok(compress_impl(input))
    }

    fn decompress(&self, input: &[u8]) -> Result<Vec<u8>> {
        decompress_impl(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn round_trip(data: &[u8]) -> Vec<u8> {
        let c = compress_impl(data);
        assert_eq!(decompress_impl(&c).unwrap(), data);
        c
    }

    fn kraft(lengths: &[u8; 256]) -> f64 {
        lengths.iter().filter(|&&l| l > 0).map(|&l| 0.5f64.powi(l as i32)).sum()
    }

    #[test]
    fn repeated_byte_is_header_only() {
        let c = round_trip(&[0x5A; 1000]);
        assert!(c.len() <= 1000 / 8 + 16, "{}", c.len());
        assert_eq!(c.len(), 1 + 2 + 1 + 1);
    }

    #[test]
    fn two_symbols() {
        let c = round_trip(b"abababababbbbbbbbbbb");
        assert_eq!(payload_bits(b"abababababbbbbbbbbbb"), 20);
        assert!(c.len() < 20);
    }

    #[test]
    fn dense_and_sparse_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dense: Vec<u8> = (0..10_000).map(|_| rng.random()).collect();
        assert_eq!(round_trip(&dense)[3], DENSE);
        let sparse: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..10u8)).collect();
        assert_eq!(round_trip(&sparse)[3], SPARSE);
    }

    #[test]
    fn fibonacci_weights_force_length_limit() {
        // Fibonacci frequencies build a maximally skewed tree.
        let mut counts = [0u64; 256];
        let (mut a, mut b) = (1u64, 1u64);
        for c in counts.iter_mut().take(30) {
            *c = a;
            (a, b) = (b, a + b);
        }
        let plain = huffman_lengths(&counts);
        assert!(plain.iter().copied().max().unwrap() > MAX_CODE_LEN);
        let limited = code_lengths(&counts);
        assert!(limited.iter().copied().max().unwrap() <= MAX_CODE_LEN);
        assert!((kraft(&limited) - 1.0).abs() < 1e-12);

        let mut data = Vec::new();
        for (s, &c) in counts.iter().enumerate().take(30) {
            data.extend(std::iter::repeat(s as u8).take(c.min(20_000) as usize));
        }
        round_trip(&data);
    }

    #[test]
    fn package_merge_matches_huffman_when_limit_is_loose() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let mut counts = [0u64; 256];
            for c in counts.iter_mut().take(rng.random_range(2..40)) {
                *c = rng.random_range(1..1000);
            }
            let cost = |l: &[u8; 256]| -> u64 { counts.iter().zip(l).map(|(&c, &l)| c * l as u64).sum() };
            assert_eq!(cost(&huffman_lengths(&counts)), cost(&package_merge_lengths(&counts, 15)));
        }
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        let data: Vec<u8> = b"the quick brown fox jumps over the lazy dog".to_vec();
        let c = compress_impl(&data);
        for cut in 0..c.len() {
            assert!(decompress_impl(&c[..cut]).unwrap_err().is_corrupt(), "cut {cut}");
        }
        let mut extra = c.clone();
        extra.push(0xFF);
        assert!(decompress_impl(&extra).is_err());
        // Two symbols both claiming the one-bit code 0 plus another.
        let bad = [3u8, 4, SPARSE, 2, b'a', 1, b'b', 1, b'c', 1, 0];
        assert!(decompress_impl(&bad).unwrap_err().is_corrupt());
    }
}
