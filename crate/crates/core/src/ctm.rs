//! Block complexity tables from the micro-universe output distribution and
//! the block decomposition estimate built on them.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use crate::bits::format_bits;
use crate::codec::{bits_to_x64, CodeLengthReport, EstimatorId};
use crate::error::{invalid, AgarError, Result};
use crate::micro::{enumerate, EnumerationIndex};

pub const MAX_BLOCK_LENGTH: usize = 12;
pub const MAX_TABLE_PROGRAM_BITS: u32 = 22;
/// Fractional bits of the stored complexities.
pub const K_FRACTION_BITS: u32 = 24;
const TABLE_MAGIC: &[u8; 8] = b"AGARCTM\0";
const TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtmTable {
    block_length: usize,
    max_program_bits: u32,
    step_budget: u64,
    /// Block value (bits read MSB first) to complexity in Q8.24 bits.
    entries: BTreeMap<u32, u32>,
}

fn block_value(block: &[u8]) -> u32 {
    block.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b))
}

fn block_bits(value: u32, b: usize) -> Vec<u8> {
    (0..b).map(|i| ((value >> (b - 1 - i)) & 1) as u8).collect()
}

fn to_fixed(bits: f64) -> u32 {
    (bits * f64::from(1u32 << K_FRACTION_BITS)).round() as u32
}

fn from_fixed(v: u32) -> f64 {
    f64::from(v) / f64::from(1u32 << K_FRACTION_BITS)
}

impl CtmTable {
    /// Builds from an existing index, normalizing over outputs of length `b`.
    pub fn from_index(index: &EnumerationIndex, b: usize) -> Result<Self> {
        if b == 0 || b > MAX_BLOCK_LENGTH {
            return invalid(format!("block length must be in 1..={MAX_BLOCK_LENGTH}"));
        }
        let blocks: Vec<(u32, u128)> = index
            .records()
            .iter()
            .filter(|r| r.output.len() == b)
            .map(|r| (block_value(&r.output), r.mass_num()))
            .collect();
        let total: u128 = blocks.iter().map(|&(_, m)| m).sum();
        if total == 0 {
            return Err(AgarError::Build(format!(
                "no program of at most {} bits prints a {b}-bit block within {} steps",
                index.max_len(),
                index.step_budget()
            )));
        }
        let entries = blocks
            .into_iter()
            .map(|(v, m)| (v, to_fixed((total as f64).log2() - (m as f64).log2())))
            .collect();
        Ok(CtmTable {
            block_length: b,
            max_program_bits: index.max_len(),
            step_budget: index.step_budget(),
            entries,
        })
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn max_program_bits(&self) -> u32 {
        self.max_program_bits
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn coverage(&self) -> f64 {
        self.entries.len() as f64 / (1u64 << self.block_length) as f64
    }

    pub fn fallback_bits(&self) -> f64 {
        let b = self.block_length as f64;
        b + 2.0 * b.log2()
    }

    /// Stored complexity, or `None` for blocks no program printed.
    pub fn lookup(&self, block: &[u8]) -> Option<f64> {
        if block.len() != self.block_length {
            return None;
        }
        self.entries.get(&block_value(block)).map(|&v| from_fixed(v))
    }

    /// Stored complexity or the fallback penalty.
    pub fn k_ctm(&self, block: &[u8]) -> f64 {
        self.lookup(block).unwrap_or_else(|| self.fallback_bits())
    }

    /// `(block, K)` pairs in block order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<u8>, f64)> + '_ {
        self.entries
            .iter()
            .map(|(&v, &k)| (block_bits(v, self.block_length), from_fixed(k)))
    }

    /// `Σ 2^{-K}` over covered blocks.
    pub fn normalization_sum(&self) -> f64 {
        self.entries.values().map(|&k| (-from_fixed(k)).exp2()).sum()
    }

    /// Block decomposition value in bits and the number of dropped remainder symbols.
    pub fn bdm_bits(&self, x: &[u8]) -> Result<(f64, usize)> {
        let b = self.block_length;
        if x.len() < b {
            return invalid(format!("input of {} symbols is shorter than one block", x.len()));
        }
        let mut counts: HashMap<&[u8], u64> = HashMap::new();
        for chunk in x.chunks_exact(b) {
            *counts.entry(chunk).or_default() += 1;
        }
        let mut distinct: Vec<(&[u8], u64)> = counts.into_iter().collect();
        distinct.sort();
        let bits = distinct
            .iter()
            .map(|&(blk, m)| self.k_ctm(blk) + (m as f64).log2())
            .sum();
        Ok((bits, x.len() % b))
    }

    pub fn bdm(&self, x: &[u8]) -> Result<CodeLengthReport> {
        let (bits, dropped) = self.bdm_bits(x)?;
        let mut params = BTreeMap::new();
        params.insert("block_length".into(), self.block_length.to_string());
        params.insert("max_program_bits".into(), self.max_program_bits.to_string());
        params.insert("step_budget".into(), self.step_budget.to_string());
        params.insert("remainder_dropped".into(), dropped.to_string());
        Ok(CodeLengthReport {
            estimator: EstimatorId::Bdm,
            n: x.len() as u64,
            bits_x64: bits_to_x64(bits),
            params,
        })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&TABLE_VERSION.to_le_bytes())?;
        w.write_all(&(self.block_length as u32).to_le_bytes())?;
        w.write_all(&self.max_program_bits.to_le_bytes())?;
        w.write_all(&self.step_budget.to_le_bytes())?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        let nbytes = self.block_length.div_ceil(8);
        for (&v, &k) in &self.entries {
            // Block bits left-aligned in big-endian bytes.
            let aligned = u64::from(v) << (nbytes * 8 - self.block_length);
            w.write_all(&aligned.to_be_bytes()[8 - nbytes..])?;
            w.write_all(&k.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_binary(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        fn take<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)
                .map_err(|e| AgarError::Decode(format!("truncated table file: {e}")))?;
            Ok(b)
        }
        if &take::<_, 8>(&mut r)? != TABLE_MAGIC {
            return Err(AgarError::Decode("not a block table file".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != TABLE_VERSION {
            return Err(AgarError::Decode(format!("unsupported table version {version}")));
        }
        let block_length = u32::from_le_bytes(take(&mut r)?) as usize;
        let max_program_bits = u32::from_le_bytes(take(&mut r)?);
        let step_budget = u64::from_le_bytes(take(&mut r)?);
        if block_length == 0 || block_length > MAX_BLOCK_LENGTH {
            return Err(AgarError::Decode(format!("bad block length {block_length}")));
        }
        let n = u32::from_le_bytes(take(&mut r)?);
        let nbytes = block_length.div_ceil(8);
        let mut entries = BTreeMap::new();
        for _ in 0..n {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf[8 - nbytes..])
                .map_err(|e| AgarError::Decode(format!("truncated table file: {e}")))?;
            let v = (u64::from_be_bytes(buf) >> (nbytes * 8 - block_length)) as u32;
            let k = u32::from_le_bytes(take(&mut r)?);
            entries.insert(v, k);
        }
        if entries.len() != n as usize || entries.is_empty() {
            return Err(AgarError::Decode("duplicate or missing table entries".into()));
        }
        Ok(CtmTable {
            block_length,
            max_program_bits,
            step_budget,
            entries,
        })
    }

    /// CSV `block,K_ctm_bits,K_ctm_q24` in block order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("block,K_ctm_bits,K_ctm_q24\n");
        for (&v, &k) in &self.entries {
            s.push_str(&format!(
                "{},{:.6},{}\n",
                format_bits(&block_bits(v, self.block_length)),
                from_fixed(k),
                k
            ));
        }
        s
    }
}

/// Enumerates the micro-universe at `(max_program_bits, step_budget)` and
/// tabulates blocks of length `b`.
pub fn build_ctm_table(b: usize, max_program_bits: u32, step_budget: u64) -> Result<CtmTable> {
    if max_program_bits > MAX_TABLE_PROGRAM_BITS {
        return Err(AgarError::Capacity(format!(
            "table builds are limited to programs of {MAX_TABLE_PROGRAM_BITS} bits"
        )));
    }
    if b == 0 || b > MAX_BLOCK_LENGTH {
        return invalid(format!("block length must be in 1..={MAX_BLOCK_LENGTH}"));
    }
    let index = enumerate(max_program_bits, step_budget)?;
    CtmTable::from_index(&index, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::random_bits;

    #[test]
    fn single_symbol_blocks_balanced() {
        let t = build_ctm_table(1, 14, 10_000).unwrap();
        let k0 = t.lookup(&[0]).unwrap();
        let k1 = t.lookup(&[1]).unwrap();
        assert!((k0 - k1).abs() < 1e-6);
        assert!((k0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_block_is_cheap() {
        let t = build_ctm_table(4, 16, 10_000).unwrap();
        let k0 = t.k_ctm(&[0, 0, 0, 0]);
        let cheaper_than = (0u32..16)
            .filter(|&v| t.k_ctm(&block_bits(v, 4)) > k0)
            .count();
        assert!(cheaper_than > 8, "{cheaper_than}");
    }

    #[test]
    fn normalization_within_tolerance() {
        for b in [1, 4, 8] {
            let t = build_ctm_table(b, 20, 10_000).unwrap();
            assert!((t.normalization_sum() - 1.0).abs() <= (-20f64).exp2());
        }
    }

    #[test]
    fn empty_support_is_a_build_error() {
        assert!(matches!(build_ctm_table(8, 6, 10_000), Err(AgarError::Build(_))));
        assert!(matches!(build_ctm_table(4, 30, 10), Err(AgarError::Capacity(_))));
    }

    #[test]
    fn deterministic_bytes_and_round_trip() {
        let a = build_ctm_table(6, 18, 10_000).unwrap();
        let b = build_ctm_table(6, 18, 10_000).unwrap();
        assert_eq!(a.to_binary(), b.to_binary());
        let back = CtmTable::read_binary(a.to_binary().as_slice()).unwrap();
        assert_eq!(back, a);
        let t10 = build_ctm_table(10, 22, 10_000).unwrap();
        assert_eq!(CtmTable::read_binary(t10.to_binary().as_slice()).unwrap(), t10);
    }

    #[test]
    fn bdm_examples() {
        let t = build_ctm_table(4, 16, 10_000).unwrap();
        let (bits, dropped) = t.bdm_bits(&[0; 12]).unwrap();
        assert!((bits - (t.k_ctm(&[0; 4]) + 3f64.log2())).abs() < 1e-12);
        assert_eq!(dropped, 0);
        let (single, _) = t.bdm_bits(&[1, 0, 1, 1]).unwrap();
        assert_eq!(single, t.k_ctm(&[1, 0, 1, 1]));
        let (_, dropped) = t.bdm_bits(&[0; 14]).unwrap();
        assert_eq!(dropped, 2);
        assert!(t.bdm_bits(&[0; 3]).is_err());
        let rep = t.bdm(&[0; 14]).unwrap();
        assert_eq!(rep.params["remainder_dropped"], "2");
    }

    #[test]
    fn zeros_below_random() {
        let t = build_ctm_table(8, 20, 10_000).unwrap();
        let zeros = t.bdm_bits(&[0; 4096]).unwrap().0;
        for seed in 0..20 {
            assert!(zeros < t.bdm_bits(&random_bits(seed, 4096)).unwrap().0);
        }
    }
}
