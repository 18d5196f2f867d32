//! Byte-packed bit strings.
//!
//! Every value the protocol moves around — headers, blinds, shares,
//! projections — is a fixed-width bit string. Storage is MSB-first: bit 0 is
//! the most significant bit of byte 0, so the textual form (`"0110…"`) reads
//! in the same order as a hex dump of the packed bytes. Unused low bits of
//! the final byte are kept at zero, which makes equality, hashing and the
//! bitwise operations plain byte operations.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use super::ModelError;

/// Number of bytes needed to hold `bits` bits.
pub(crate) fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

/// A fixed-length string of bits.
///
/// Bit positions are 0-based internally; diagnostics render them 1-based.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    /// The all-zero string of `len` bits.
    pub fn zeros(len: usize) -> Self {
        BitString {
            bytes: vec![0; byte_len(len)],
            len,
        }
    }

    /// A uniformly random string of `len` bits.
    pub fn random(len: usize, rng: &mut dyn RngCore) -> Self {
        let mut bytes = vec![0; byte_len(len)];
        rng.fill_bytes(&mut bytes);
        let mut out = BitString { bytes, len };
        out.clear_padding();
        out
    }

    /// Parses a string of `0`/`1` characters. The empty string is the empty
    /// bit string.
    pub fn from_text(s: &str) -> Result<Self, ModelError> {
        let mut out = BitString::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set_bit(i, true),
                other => {
                    return Err(ModelError::BadSymbol {
                        position: i,
                        found: other,
                    })
                }
            }
        }
        Ok(out)
    }

    /// Reconstructs a bit string from its packed form. The buffer must be
    /// exactly `byte_len(len)` bytes and any padding bits must be zero.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, ModelError> {
        let need = byte_len(len);
        if bytes.len() != need {
            return Err(ModelError::BufferSize {
                have: bytes.len(),
                need,
                bits: len,
            });
        }
        let out = BitString {
            bytes: bytes.to_vec(),
            len,
        };
        if !out.padding_clear() {
            return Err(ModelError::DirtyPadding { bits: len });
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The packed bytes, MSB-first, padding bits zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Reads bit `i`. Panics if `i >= len`; an out-of-range index is a caller
    /// bug, not a protocol condition.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn set_bit(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 0x80 >> (i % 8);
        if v {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    /// Bitwise XOR. Panics on length mismatch; operands of different widths
    /// never meet in a correct caller.
    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor of {} and {} bits", self.len, other.len);
        for (a, b) in self.bytes.iter_mut().zip(&other.bytes) {
            *a ^= b;
        }
    }

    /// Bitwise AND. Panics on length mismatch.
    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "and of {} and {} bits", self.len, other.len);
        let bytes = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| a & b)
            .collect();
        BitString { bytes, len: self.len }
    }

    /// Overwrites the bits selected by `mask` with the corresponding bits of
    /// `values`: `self = (self & !mask) | (values & mask)`.
    pub fn overwrite_masked(&mut self, values: &Self, mask: &Self) {
        assert_eq!(self.len, values.len);
        assert_eq!(self.len, mask.len);
        for ((a, v), m) in self.bytes.iter_mut().zip(&values.bytes).zip(&mask.bytes) {
            *a = (*a & !m) | (v & m);
        }
    }

    /// Number of one bits.
    pub fn weight(&self) -> u32 {
        self.bytes.iter().map(|b| b.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|b| *b == 0)
    }

    /// The first `len` bits. Panics if `len > self.len()`.
    pub fn prefix(&self, len: usize) -> Self {
        assert!(len <= self.len, "prefix of {len} bits from {} bits", self.len);
        let mut out = BitString {
            bytes: self.bytes[..byte_len(len)].to_vec(),
            len,
        };
        out.clear_padding();
        out
    }

    /// The bits from position `start` to the end. Panics if `start > len`.
    pub fn suffix_from(&self, start: usize) -> Self {
        assert!(start <= self.len, "suffix from {start} of {} bits", self.len);
        if start.is_multiple_of(8) {
            let mut out = BitString {
                bytes: self.bytes[start / 8..].to_vec(),
                len: self.len - start,
            };
            out.clear_padding();
            return out;
        }
        let mut out = BitString::zeros(self.len - start);
        for i in start..self.len {
            if self.bit(i) {
                out.set_bit(i - start, true);
            }
        }
        out
    }

    /// Concatenation: `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Self {
        if self.len.is_multiple_of(8) {
            let mut bytes = self.bytes.clone();
            bytes.extend_from_slice(&other.bytes);
            return BitString {
                bytes,
                len: self.len + other.len,
            };
        }
        let mut out = BitString::zeros(self.len + other.len);
        out.bytes[..self.bytes.len()].copy_from_slice(&self.bytes);
        for i in 0..other.len {
            if other.bit(i) {
                out.set_bit(self.len + i, true);
            }
        }
        out
    }

    fn padding_clear(&self) -> bool {
        match self.len % 8 {
            0 => true,
            rem => self.bytes[self.len / 8] & (0xFFu8 >> rem) == 0,
        }
    }

    fn clear_padding(&mut self) {
        if !self.len.is_multiple_of(8) {
            let last = self.len / 8;
            self.bytes[last] &= !(0xFFu8 >> (self.len % 8));
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BitString::from_text(s)
    }
}
