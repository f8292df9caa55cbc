//! Greedy hash-chain LZ77 with flag-packed tokens.
//!
//! Stream layout:
//!
//! ```text
//! tag            u8      = 2
//! original_len   varint
//! offset_bytes   u8      bytes per stored offset (1..=3)
//! min_match      u8
//! groups*        flag byte, then up to 8 tokens; bit i (LSB first) set
//!                means token i is a match
//!   literal      u8
//!   match        length_code u8 (length - min_match, 255 = escape followed
//!                by varint of the remainder), then offset - 1 as
//!                little-endian `offset_bytes`
//! ```

use super::bits::{read_u8, read_varint, write_varint};
use super::{expect_tag, Codec, CodecId, CodecParams};
use crate::error::{Error, Result};

const MAX_CHAIN: usize = 32;
const MAX_MATCH: usize = 1 << 16;
const NIL: u32 = u32::MAX;

pub struct Lz77;

/// Upper bound on the compressed size of `n` input bytes: header plus one
/// flag byte per eight literals.
pub fn max_compressed_len(n: usize) -> usize {
    1 + 10 + 2 + n + n.div_ceil(8)
}

fn offset_bytes(window: usize) -> usize {
    let bits = usize::BITS - (window - 1).leading_zeros();
    (bits as usize).div_ceil(8).max(1)
}

struct MatchFinder<'a> {
    data: &'a [u8],
    head: Vec<u32>,
    prev: Vec<u32>,
    hash_shift: u32,
    window: usize,
    min_match: usize,
}

impl<'a> MatchFinder<'a> {
    fn new(data: &'a [u8], window: usize, min_match: usize) -> Self {
        // Table sized to the input so that tiny streams stay cheap.
        let bits = (usize::BITS - data.len().leading_zeros()).clamp(4, 16);
        MatchFinder {
            data,
            head: vec![NIL; 1 << bits],
            prev: vec![NIL; window.min(data.len().next_power_of_two())],
            hash_shift: 32 - bits,
            window,
            min_match,
        }
    }

    #[inline]
    fn hash(&self, pos: usize) -> usize {
        let d = self.data;
        let v = (d[pos] as u32) | ((d[pos + 1] as u32) << 8) | ((d[pos + 2] as u32) << 16);
        (v.wrapping_mul(0x9E37_79B1) >> self.hash_shift) as usize
    }

    #[inline]
    fn insert(&mut self, pos: usize) {
        if pos + 3 > self.data.len() {
            return;
        }
        let h = self.hash(pos);
        let mask = self.prev.len() - 1;
        self.prev[pos & mask] = self.head[h];
        self.head[h] = pos as u32;
    }

    /// Longest earlier match for `pos` as `(length, distance)`.
    fn longest(&self, pos: usize) -> Option<(usize, usize)> {
        let d = self.data;
        if pos + self.min_match > d.len() {
            return None;
        }
        let max_len = (d.len() - pos).min(MAX_MATCH);
        let mask = self.prev.len() - 1;
        let mut cand = self.head[self.hash(pos)];
        let mut best: Option<(usize, usize)> = None;
        for _ in 0..MAX_CHAIN {
            if cand == NIL {
                break;
            }
            let c = cand as usize;
            let dist = pos - c;
            if dist > self.window || dist > self.prev.len() {
                break;
            }
            let best_len = best.map_or(0, |b| b.0);
            if best_len < max_len && d[c + best_len] == d[pos + best_len] {
                let len = d[c..c + max_len]
                    .iter()
                    .zip(&d[pos..pos + max_len])
                    .take_while(|(a, b)| a == b)
                    .count();
                if len > best_len {
                    best = Some((len, dist));
                    if len == max_len {
                        break;
                    }
                }
            }
            let next = self.prev[c & mask];
            if next == NIL || next as usize >= c {
                break;
            }
            cand = next;
        }
        best.filter(|&(len, _)| len >= self.min_match)
    }
}

enum Token {
    Literal(u8),
    Match { len: usize, dist: usize },
}

struct TokenWriter {
    out: Vec<u8>,
    flag_pos: usize,
    count: u32,
    min_match: usize,
    offset_bytes: usize,
}

impl TokenWriter {
    fn push(&mut self, t: Token) {
        if self.count % 8 == 0 {
            self.flag_pos = self.out.len();
            self.out.push(0);
        }
        match t {
            Token::Literal(b) => self.out.push(b),
            Token::Match { len, dist } => {
                self.out[self.flag_pos] |= 1 << (self.count % 8);
                let code = len - self.min_match;
                if code < 255 {
                    self.out.push(code as u8);
                } else {
                    self.out.push(255);
                    write_varint(&mut self.out, (code - 255) as u64);
                }
                let off = (dist - 1) as u32;
                self.out.extend_from_slice(&off.to_le_bytes()[..self.offset_bytes]);
            }
        }
        self.count += 1;
    }
}

fn compress_impl(params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
    params.validate()?;
    let window = params.lz77_window;
    let min_match = params.lz77_min_match;
    let ob = offset_bytes(window);

    let mut out = Vec::with_capacity(input.len() / 2 + 16);
    out.push(CodecId::LZ77.0 as u8);
    write_varint(&mut out, input.len() as u64);
    out.push(ob as u8);
    out.push(min_match as u8);

    let mut w = TokenWriter {
        out,
        flag_pos: 0,
        count: 0,
        min_match,
        offset_bytes: ob,
    };
    if input.len() < min_match {
        // No match can fit; skip building the hash chains.
        for &b in input {
            w.push(Token::Literal(b));
        }
        return Ok(w.out);
    }
    let mut mf = MatchFinder::new(input, window, min_match);
    let mut pos = 0;
    while pos < input.len() {
        let mut found = mf.longest(pos);
        // Whether `pos` already sits in the hash chains.
        let mut inserted = false;
        if let (true, Some((len, _))) = (params.lz77_lazy, found) {
            mf.insert(pos);
            inserted = true;
            let next = mf.longest(pos + 1);
            if next.is_some_and(|(next_len, _)| next_len > len) {
                w.push(Token::Literal(input[pos]));
                pos += 1;
                found = next;
                inserted = false;
            }
        }
        match found {
            Some((len, dist)) => {
                w.push(Token::Match { len, dist });
                let first = if inserted { pos + 1 } else { pos };
                for p in first..pos + len {
                    mf.insert(p);
                }
                pos += len;
            }
            None => {
                w.push(Token::Literal(input[pos]));
                mf.insert(pos);
                pos += 1;
            }
        }
    }
    Ok(w.out)
}

fn decompress_impl(input: &[u8]) -> Result<Vec<u8>> {
    expect_tag(input, CodecId::LZ77)?;
    let mut pos = 1;
    let len = read_varint(input, &mut pos)? as usize;
    let ob = read_u8(input, &mut pos)? as usize;
    let min_match = read_u8(input, &mut pos)? as usize;
    if !(1..=3).contains(&ob) || min_match < 3 {
        return Err(Error::corrupt(pos - 2, "bad lz77 header"));
    }
    // Every token yields at least one byte, so the input bounds the output.
    if len > input.len().saturating_mul(MAX_MATCH) {
        return Err(Error::corrupt(1, "implausible original length"));
    }
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let flags = read_u8(input, &mut pos)?;
        for bit in 0..8 {
            if out.len() >= len {
                if flags >> bit != 0 {
                    return Err(Error::corrupt(pos, "flag bits past end of data"));
                }
                break;
            }
            if flags & (1 << bit) == 0 {
                out.push(read_u8(input, &mut pos)?);
                continue;
            }
            let at = pos;
            let mut code = read_u8(input, &mut pos)? as usize;
            if code == 255 {
                code += read_varint(input, &mut pos)? as usize;
            }
            let mlen = code + min_match;
            let off_bytes = input
                .get(pos..pos + ob)
                .ok_or_else(|| Error::corrupt(pos, "truncated match offset"))?;
            pos += ob;
            let mut le = [0u8; 4];
            le[..ob].copy_from_slice(off_bytes);
            let dist = u32::from_le_bytes(le) as usize + 1;
            if dist > out.len() {
                return Err(Error::corrupt(at, format!("match distance {dist} before start of data")));
            }
            if mlen > len - out.len() {
                return Err(Error::corrupt(at, "match runs past end of data"));
            }
            let start = out.len() - dist;
            if dist >= mlen {
                out.extend_from_within(start..start + mlen);
            } else {
                for i in 0..mlen {
                    let b = out[start + i];
                    out.push(b);
                }
            }
        }
    }
    if pos != input.len() {
        return Err(Error::corrupt(pos, "trailing data after stream"));
    }
    Ok(out)
}

impl Codec for Lz77 {
    fn id(&self) -> CodecId {
        CodecId::LZ77
    }

    fn name(&self) -> &str {
        "lz77"
    }

    fn compress(&self, params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
        compress_impl(params, input)
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

    fn round_trip(params: &CodecParams, data: &[u8]) -> Vec<u8> {
        let c = compress_impl(params, data).unwrap();
        assert_eq!(decompress_impl(&c).unwrap(), data);
        c
    }

    #[test]
    fn periodic_input_is_small() {
        let data: Vec<u8> = b"abc".iter().copied().cycle().take(300).collect();
        let c = round_trip(&CodecParams::default(), &data);
        assert!(c.len() < 60, "{} bytes", c.len());
    }

    #[test]
    fn long_runs_and_overlaps() {
        let p = CodecParams::default();
        round_trip(&p, &[9u8; 200_000]);
        let mut data = vec![1u8, 2, 3, 4, 5];
        data.extend(std::iter::repeat(7u8).take(1000));
        data.extend_from_slice(&[1, 2, 3, 4, 5]);
        round_trip(&p, &data);
    }

    #[test]
    fn random_input_expansion_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [0usize, 1, 2, 3, 7, 8, 9, 100, 4096, 70_000] {
            let data: Vec<u8> = (0..n).map(|_| rng.random()).collect();
            let c = round_trip(&CodecParams::default(), &data);
            assert!(c.len() <= max_compressed_len(n), "n={n} got {}", c.len());
        }
    }

    #[test]
    fn small_windows_and_lazy_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base: Vec<u8> = (0..3000).map(|_| rng.random_range(0..4u8)).collect();
        for window in [256usize, 1 << 12, 1 << 20] {
            for lazy in [false, true] {
                for min_match in [3, 4, 8] {
                    let p = CodecParams { lz77_window: window, lz77_lazy: lazy, lz77_min_match: min_match, ..Default::default() };
                    round_trip(&p, &base);
                }
            }
        }
    }

    #[test]
    fn offset_width_tracks_window() {
        assert_eq!(offset_bytes(256), 1);
        assert_eq!(offset_bytes(512), 2);
        assert_eq!(offset_bytes(1 << 16), 2);
        assert_eq!(offset_bytes(1 << 17), 3);
        assert_eq!(offset_bytes(1 << 24), 3);
    }

    #[test]
    fn truncation_and_bad_offsets_are_detected() {
        let data: Vec<u8> = b"hello hello hello world".to_vec();
        let c = compress_impl(&CodecParams::default(), &data).unwrap();
        for cut in 0..c.len() {
            assert!(decompress_impl(&c[..cut]).unwrap_err().is_corrupt(), "cut {cut}");
        }
        let mut extended = c.clone();
        extended.push(0);
        assert!(decompress_impl(&extended).is_err());

        // A match before any literal points outside the output.
        let bogus = [2u8, 5, 2, 3, 0b1, 0, 0, 0];
        assert!(decompress_impl(&bogus).unwrap_err().is_corrupt());
    }
}
