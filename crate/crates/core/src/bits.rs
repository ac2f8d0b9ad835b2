//! Bit strings, a minimal MSB-first bit writer/reader and Elias-gamma codes.
//!
//! Bit strings throughout the crate are `Vec<u8>` / `&[u8]` holding one
//! symbol (0 or 1) per byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AgarError, Result};

/// Number of fixed-point units per bit used by codelength reports.
pub const UNITS_PER_BIT: i64 = 64;

/// Parses a string of `'0'`/`'1'` characters. Whitespace is ignored.
pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(AgarError::InvalidArgument(format!(
                "bit strings may only contain 0 and 1, found {other:?}"
            ))),
        })
        .collect()
}

pub fn format_bits(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

/// `n` uniformly random bits from a ChaCha8 stream seeded with `seed`.
pub fn random_bits(seed: u64, n: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

pub fn xor_bits(a: &[u8], b: &[u8]) -> Result<Vec<u8>> {
    if a.len() != b.len() {
        return Err(AgarError::InvalidArgument(format!(
            "xor of strings with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

/// Bitwise interleaving of equal-length strings: `a1 b1 c1 a2 b2 c2 ...`.
pub fn interleave(parts: &[&[u8]]) -> Result<Vec<u8>> {
    let n = parts.first().map_or(0, |p| p.len());
    if parts.iter().any(|p| p.len() != n) {
        return Err(AgarError::InvalidArgument(
            "interleaving requires equal-length strings".into(),
        ));
    }
    let mut out = Vec::with_capacity(n * parts.len());
    for t in 0..n {
        for p in parts {
            out.push(p[t]);
        }
    }
    Ok(out)
}

/// `ceil(log2(n))` for `n >= 1`; 0 for `n <= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Length of the Elias-gamma code of `n >= 1`.
pub fn elias_gamma_len(n: u64) -> u64 {
    assert!(n >= 1, "Elias gamma is defined for n >= 1");
    2 * u64::from(63 - n.leading_zeros()) + 1
}

/// Length header used by every codelength estimator: gamma code of `len + 1`,
/// so the empty string costs one bit.
pub fn length_header_len(len: usize) -> u64 {
    elias_gamma_len(len as u64 + 1)
}

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bits: Vec<u8>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: u8) {
        self.bits.push(bit & 1);
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_uint(&mut self, value: u64, width: u32) {
        debug_assert!(width == 64 || value < (1u64 << width));
        for i in (0..width).rev() {
            self.bits.push(((value >> i) & 1) as u8);
        }
    }

    pub fn write_gamma(&mut self, n: u64) {
        assert!(n >= 1, "Elias gamma is defined for n >= 1");
        let width = 64 - n.leading_zeros();
        for _ in 1..width {
            self.bits.push(0);
        }
        self.write_uint(n, width);
    }

    pub fn extend(&mut self, bits: &[u8]) {
        self.bits.extend_from_slice(bits);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a [u8]) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn read_bit(&mut self) -> Result<u8> {
        let b = *self
            .bits
            .get(self.pos)
            .ok_or_else(|| AgarError::Decode("unexpected end of bitstream".into()))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn read_uint(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v)
    }

    pub fn read_gamma(&mut self) -> Result<u64> {
        let mut zeros = 0u32;
        while self.read_bit()? == 0 {
            zeros += 1;
            if zeros > 63 {
                return Err(AgarError::Decode("gamma code too long".into()));
            }
        }
        let rest = self.read_uint(zeros)?;
        Ok((1u64 << zeros) | rest)
    }
}

/// Packs bits MSB-first into bytes, zero-padding the final byte.
pub fn pack_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))
        })
        .collect()
}

pub fn unpack_bytes(bytes: &[u8], nbits: usize) -> Vec<u8> {
    (0..nbits).map(|i| (bytes[i / 8] >> (7 - (i % 8))) & 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma_lengths() {
        assert_eq!(elias_gamma_len(1), 1);
        assert_eq!(elias_gamma_len(2), 3);
        assert_eq!(elias_gamma_len(3), 3);
        assert_eq!(elias_gamma_len(4), 5);
        assert_eq!(elias_gamma_len(11), 7);
        assert_eq!(length_header_len(0), 1);
        assert_eq!(length_header_len(10), 7);
    }

    #[test]
    fn ceil_log2_small() {
        let expected = [0, 0, 1, 2, 2, 3, 3, 3, 3, 4];
        for (n, e) in expected.iter().enumerate() {
            assert_eq!(ceil_log2(n as u64), *e, "n={n}");
        }
    }

    #[test]
    fn gamma_code_of_five() {
        let mut w = BitWriter::new();
        w.write_gamma(5);
        assert_eq!(format_bits(&w.into_bits()), "00101");
    }

    #[test]
    fn parse_rejects_other_symbols() {
        assert!(parse_bits("0102").is_err());
        assert_eq!(parse_bits("01 10").unwrap(), vec![0, 1, 1, 0]);
    }

    proptest! {
        #[test]
        fn gamma_roundtrip(values in proptest::collection::vec(1u64..1_000_000, 0..20)) {
            let mut w = BitWriter::new();
            for &v in &values {
                w.write_gamma(v);
            }
            let expected: u64 = values.iter().map(|&v| elias_gamma_len(v)).sum();
            let bits = w.into_bits();
            prop_assert_eq!(bits.len() as u64, expected);
            let mut r = BitReader::new(&bits);
            for &v in &values {
                prop_assert_eq!(r.read_gamma().unwrap(), v);
            }
            prop_assert_eq!(r.remaining(), 0);
        }

        #[test]
        fn pack_unpack(bits in proptest::collection::vec(0u8..2, 0..100)) {
            prop_assert_eq!(unpack_bytes(&pack_bytes(&bits), bits.len()), bits);
        }
    }
}
