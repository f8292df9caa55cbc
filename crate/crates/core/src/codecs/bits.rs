//! MSB-first bit packing and LEB128 varints shared by the in-house codecs.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub fn new(out: Vec<u8>) -> Self {
        BitWriter { out, acc: 0, filled: 0 }
    }

    /// Appends the low `n` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        if n == 0 {
            return;
        }
        if n > 32 {
            self.write(value >> 32, n - 32);
            self.write(value & 0xFFFF_FFFF, 32);
            return;
        }
        let value = value & ((1u64 << n) - 1);
        self.acc = (self.acc << n) | value;
        self.filled += n;
        while self.filled >= 8 {
            self.filled -= 8;
            self.out.push((self.acc >> self.filled) as u8);
        }
        self.acc &= (1u64 << self.filled) - 1;
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.write(bit as u64, 1);
    }

    /// Flushes the partial byte (zero padded) and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            let pad = 8 - self.filled;
            self.out.push((self.acc << pad) as u8);
        }
        self.out
    }
}

pub struct BitReader<'a> {
    data: &'a [u8],
    /// Absolute offset of `data[0]` in the enclosing stream, for diagnostics.
    base: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], base: usize) -> Self {
        BitReader { data, base, pos: 0 }
    }

    pub fn bits_left(&self) -> usize {
        self.data.len() * 8 - self.pos
    }

    pub fn byte_offset(&self) -> usize {
        self.base + self.pos / 8
    }

    /// Next `n` bits without consuming them; bits past the end read as 0.
    pub fn peek(&self, n: u32) -> u64 {
        let mut v = 0u64;
        let mut pos = self.pos;
        let mut need = n;
        while need > 0 {
            let byte = self.data.get(pos / 8).copied().unwrap_or(0);
            let avail = 8 - (pos % 8) as u32;
            let take = avail.min(need);
            let bits = (byte >> (avail - take)) & (((1u16 << take) - 1) as u8);
            v = (v << take) | bits as u64;
            pos += take as usize;
            need -= take;
        }
        v
    }

    pub fn consume(&mut self, n: u32) -> Result<()> {
        if (n as usize) > self.bits_left() {
            return Err(Error::corrupt(self.byte_offset(), "bit stream ends early"));
        }
        self.pos += n as usize;
        Ok(())
    }

    pub fn read(&mut self, n: u32) -> Result<u64> {
        let v = self.peek(n);
        self.consume(n)?;
        Ok(v)
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        Ok(self.read(1)? == 1)
    }

    /// Fails unless only zero padding of the final byte remains.
    pub fn expect_end(&self) -> Result<()> {
        if self.bits_left() >= 8 || self.peek(self.bits_left() as u32) != 0 {
            return Err(Error::corrupt(self.byte_offset(), "trailing data after stream"));
        }
        Ok(())
    }
}

pub fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Reads a varint at `*pos`, advancing it.
pub fn read_varint(data: &[u8], pos: &mut usize) -> Result<u64> {
    let start = *pos;
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = *data
            .get(*pos)
            .ok_or_else(|| Error::corrupt(*pos, "truncated varint"))?;
        *pos += 1;
        v |= ((byte & 0x7F) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::corrupt(start, "varint overflow"))
}

pub fn read_u8(data: &[u8], pos: &mut usize) -> Result<u8> {
    let b = *data
        .get(*pos)
        .ok_or_else(|| Error::corrupt(*pos, "unexpected end of stream"))?;
    *pos += 1;
    Ok(b)
}
