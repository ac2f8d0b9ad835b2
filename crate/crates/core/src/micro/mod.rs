//! An enumerable prefix machine. Programs are streams of 2-bit instructions
//! ending at their first HALT, so the valid programs form a prefix-free set.

pub mod checks;
pub mod gar;

use std::collections::HashMap;
use std::io::{Read, Write};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bits::{format_bits, pack_bytes, unpack_bytes};
use crate::error::{AgarError, Result};

/// Exact dyadic rationals used for masses and posteriors.
pub type Dyadic = Ratio<u128>;

pub const MAX_PROGRAM_BITS: u32 = 24;
pub const MAX_STEP_BUDGET: u64 = 1_000_000;
const OPCODE_SET: &str = "EMIT0=00 EMIT1=01 DBL=10 HALT=11; DBL costs 1+len(buffer) steps";
const INDEX_MAGIC: &[u8; 8] = b"AGARIDX\0";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instr {
    Emit0,
    Emit1,
    Dbl,
    Halt,
}

impl Instr {
    pub fn opcode(self) -> [u8; 2] {
        match self {
            Instr::Emit0 => [0, 0],
            Instr::Emit1 => [0, 1],
            Instr::Dbl => [1, 0],
            Instr::Halt => [1, 1],
        }
    }

    pub fn from_opcode(hi: u8, lo: u8) -> Instr {
        match (hi, lo) {
            (0, 0) => Instr::Emit0,
            (0, 1) => Instr::Emit1,
            (1, 0) => Instr::Dbl,
            _ => Instr::Halt,
        }
    }

    const BODY: [Instr; 3] = [Instr::Emit0, Instr::Emit1, Instr::Dbl];
}

/// First 8 bytes of the SHA-256 of the opcode-set description.
pub fn opcode_set_hash() -> [u8; 8] {
    let d = Sha256::digest(OPCODE_SET.as_bytes());
    let mut out = [0u8; 8];
    out.copy_from_slice(&d[..8]);
    out
}

/// Applies one non-HALT instruction, returning its step cost.
fn apply(buf: &mut Vec<u8>, instr: Instr) -> u64 {
    match instr {
        Instr::Emit0 => {
            buf.push(0);
            1
        }
        Instr::Emit1 => {
            buf.push(1);
            1
        }
        Instr::Dbl => {
            let n = buf.len();
            buf.extend_from_within(..);
            1 + n as u64
        }
        Instr::Halt => 1,
    }
}

/// Assembles a body of non-HALT instructions into a program code.
pub fn assemble(body: &[Instr]) -> Vec<u8> {
    let mut code = Vec::with_capacity(2 * body.len() + 2);
    for &i in body.iter().filter(|&&i| i != Instr::Halt) {
        code.extend_from_slice(&i.opcode());
    }
    code.extend_from_slice(&Instr::Halt.opcode());
    code
}

/// Whether `code` is a syntactically valid program: whole instructions with
/// the first HALT at the very end.
pub fn is_valid_program(code: &[u8]) -> bool {
    if code.is_empty() || code.len() % 2 != 0 {
        return false;
    }
    let n = code.len() / 2;
    (0..n).all(|i| {
        let halt = Instr::from_opcode(code[2 * i], code[2 * i + 1]) == Instr::Halt;
        halt == (i + 1 == n)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroProgram {
    pub code: Vec<u8>,
    /// `None` when the program needs more than the step budget.
    pub output: Option<Vec<u8>>,
    pub steps_used: u64,
}

impl MicroProgram {
    pub fn run(code: &[u8], step_budget: u64) -> Result<Self> {
        if !is_valid_program(code) {
            return Err(AgarError::Decode(format!(
                "not a valid program: {}",
                format_bits(code)
            )));
        }
        let mut buf = Vec::new();
        let mut steps = 0u64;
        for pair in code.chunks(2) {
            let instr = Instr::from_opcode(pair[0], pair[1]);
            if instr == Instr::Halt {
                steps += 1;
                break;
            }
            steps += apply(&mut buf, instr);
            if steps > step_budget {
                break;
            }
        }
        let output = (steps <= step_budget).then_some(buf);
        Ok(MicroProgram {
            code: code.to_vec(),
            output,
            steps_used: steps,
        })
    }

    pub fn length(&self) -> u32 {
        self.code.len() as u32
    }
}

fn check_limits(max_len: u32, step_budget: u64) -> Result<()> {
    if max_len > MAX_PROGRAM_BITS {
        return Err(AgarError::Capacity(format!(
            "program length {max_len} exceeds the enumeration limit of {MAX_PROGRAM_BITS} bits"
        )));
    }
    if step_budget > MAX_STEP_BUDGET {
        return Err(AgarError::Capacity(format!(
            "step budget {step_budget} exceeds the limit of {MAX_STEP_BUDGET}"
        )));
    }
    Ok(())
}

/// Every valid program of at most `max_len` bits, run under the budget, in
/// increasing length then lexicographic code order.
pub fn enumerate_programs(max_len: u32, step_budget: u64) -> Result<Vec<MicroProgram>> {
    check_limits(max_len, step_budget)?;
    let mut out = Vec::new();
    let max_body = (max_len as usize / 2).checked_sub(1);
    let Some(max_body) = max_body else {
        return Ok(out);
    };
    let mut layer: Vec<Vec<Instr>> = vec![Vec::new()];
    for k in 0..=max_body {
        for body in &layer {
            out.push(MicroProgram::run(&assemble(body), step_budget)?);
        }
        if k < max_body {
            layer = layer
                .iter()
                .flat_map(|b| {
                    Instr::BODY.iter().map(move |&i| {
                        let mut nb = b.clone();
                        nb.push(i);
                        nb
                    })
                })
                .collect();
        }
    }
    Ok(out)
}

/// Per-output enumeration record. `counts[l]` is the number of halting
/// programs of exactly `l` bits that print `output`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub output: Vec<u8>,
    pub counts: Vec<u64>,
}

impl OutputRecord {
    /// Length of the shortest program printing the output.
    pub fn k(&self) -> u32 {
        self.counts
            .iter()
            .position(|&c| c > 0)
            .expect("records have at least one program") as u32
    }

    /// Numerator of `m_L` over the common denominator `2^L`.
    pub fn mass_num(&self) -> u128 {
        let max_len = self.counts.len() - 1;
        self.counts
            .iter()
            .enumerate()
            .map(|(l, &c)| u128::from(c) << (max_len - l))
            .sum()
    }

    /// Number of programs of at most `len` bits printing the output.
    pub fn n_le(&self, len: u32) -> u64 {
        self.counts.iter().take(len as usize + 1).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn output_cmp(a: &[u8], b: &[u8]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Exhaustive table of outputs of the budgeted micro-universe, sorted by
/// output length then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationIndex {
    max_len: u32,
    step_budget: u64,
    records: Vec<OutputRecord>,
    lookup: HashMap<Vec<u8>, usize>,
}

struct Walk<'a> {
    max_body: usize,
    step_budget: u64,
    counts: &'a mut HashMap<Vec<u8>, Vec<u64>>,
    width: usize,
}

impl Walk<'_> {
    fn visit(&mut self, buf: &mut Vec<u8>, steps: u64, k: usize) {
        if steps < self.step_budget {
            let e = self
                .counts
                .entry(buf.clone())
                .or_insert_with(|| vec![0; self.width]);
            e[2 * (k + 1)] += 1;
        }
        if k == self.max_body || steps >= self.step_budget {
            return;
        }
        for instr in Instr::BODY {
            let len = buf.len();
            let cost = apply(buf, instr);
            self.visit(buf, steps + cost, k + 1);
            buf.truncate(len);
        }
    }
}

impl EnumerationIndex {
    pub fn max_len(&self) -> u32 {
        self.max_len
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, x: &[u8]) -> Option<&OutputRecord> {
        self.lookup.get(x).map(|&i| &self.records[i])
    }

    /// `K_L(x)`, or `None` when no program of at most `L` bits prints `x`.
    pub fn k(&self, x: &[u8]) -> Option<u32> {
        self.get(x).map(OutputRecord::k)
    }

    /// `K_L(x)` with unindexed strings charged `L + 1` bits.
    pub fn k_or_beyond(&self, x: &[u8]) -> u32 {
        self.k(x).unwrap_or(self.max_len + 1)
    }

    pub fn denominator(&self) -> u128 {
        1u128 << self.max_len
    }

    /// `m_L(x)` as an exact dyadic rational; zero when unindexed.
    pub fn mass(&self, x: &[u8]) -> Dyadic {
        let num = self.get(x).map_or(0, OutputRecord::mass_num);
        Dyadic::new(num, self.denominator())
    }

    pub fn kraft_sum(&self) -> Dyadic {
        let num: u128 = self.records.iter().map(OutputRecord::mass_num).sum();
        Dyadic::new(num, self.denominator())
    }

    pub fn total_programs(&self) -> u64 {
        self.records.iter().map(OutputRecord::total).sum()
    }

    fn from_counts(max_len: u32, step_budget: u64, counts: HashMap<Vec<u8>, Vec<u64>>) -> Self {
        let mut records: Vec<OutputRecord> = counts
            .into_iter()
            .map(|(output, counts)| OutputRecord { output, counts })
            .collect();
        records.sort_by(|a, b| output_cmp(&a.output, &b.output));
        let lookup = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.output.clone(), i))
            .collect();
        EnumerationIndex {
            max_len,
            step_budget,
            records,
            lookup,
        }
    }

    /// Writes the versioned binary form.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(INDEX_MAGIC)?;
        w.write_all(&INDEX_VERSION.to_le_bytes())?;
        w.write_all(&self.max_len.to_le_bytes())?;
        w.write_all(&self.step_budget.to_le_bytes())?;
        w.write_all(&opcode_set_hash())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for r in &self.records {
            w.write_all(&(r.output.len() as u32).to_le_bytes())?;
            w.write_all(&pack_bytes(&r.output))?;
            for &c in &r.counts {
                w.write_all(&c.to_le_bytes())?;
            }
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
                .map_err(|e| AgarError::Decode(format!("truncated index file: {e}")))?;
            Ok(b)
        }
        if &take::<_, 8>(&mut r)? != INDEX_MAGIC {
            return Err(AgarError::Decode("not an enumeration index file".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != INDEX_VERSION {
            return Err(AgarError::Decode(format!("unsupported index version {version}")));
        }
        let max_len = u32::from_le_bytes(take(&mut r)?);
        let step_budget = u64::from_le_bytes(take(&mut r)?);
        if take::<_, 8>(&mut r)? != opcode_set_hash() {
            return Err(AgarError::Decode("index built for a different opcode set".into()));
        }
        check_limits(max_len, step_budget)?;
        let n = u64::from_le_bytes(take(&mut r)?);
        let mut counts = HashMap::new();
        for _ in 0..n {
            let len = u32::from_le_bytes(take(&mut r)?) as usize;
            let mut packed = vec![0u8; len.div_ceil(8)];
            r.read_exact(&mut packed)
                .map_err(|e| AgarError::Decode(format!("truncated index file: {e}")))?;
            let mut c = Vec::with_capacity(max_len as usize + 1);
            for _ in 0..=max_len {
                c.push(u64::from_le_bytes(take(&mut r)?));
            }
            if c.iter().all(|&v| v == 0) {
                return Err(AgarError::Decode("index record without programs".into()));
            }
            counts.insert(unpack_bytes(&packed, len), c);
        }
        if counts.len() as u64 != n {
            return Err(AgarError::Decode("duplicate outputs in index file".into()));
        }
        Ok(Self::from_counts(max_len, step_budget, counts))
    }

    /// CSV with columns `x,K_L,m_L_num,m_L_den,N_le_counts`; the last column
    /// lists `N_{<=l}(x)` for `l = 1..=L` separated by `;`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,K_L,m_L_num,m_L_den,N_le_counts\n");
        for r in &self.records {
            let m = Dyadic::new(r.mass_num(), self.denominator());
            let n_le: Vec<String> = (1..=self.max_len).map(|l| r.n_le(l).to_string()).collect();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                format_bits(&r.output),
                r.k(),
                m.numer(),
                m.denom(),
                n_le.join(";")
            ));
        }
        s
    }
}

/// Runs every valid program of at most `max_len` bits for at most
/// `step_budget` steps and tabulates the halting outputs.
pub fn enumerate(max_len: u32, step_budget: u64) -> Result<EnumerationIndex> {
    check_limits(max_len, step_budget)?;
    let width = max_len as usize + 1;
    let Some(max_body) = (max_len as usize / 2).checked_sub(1) else {
        return Ok(EnumerationIndex::from_counts(max_len, step_budget, HashMap::new()));
    };
    // Programs with fewer than `shard_depth` body instructions are handled
    // here; each length-`shard_depth` body prefix becomes an independent shard.
    let shard_depth = max_body.min(3);
    let mut counts: HashMap<Vec<u8>, Vec<u64>> = HashMap::new();
    let mut frontier: Vec<(Vec<u8>, u64)> = vec![(Vec::new(), 0)];
    for k in 0..shard_depth {
        let mut next = Vec::new();
        for (buf, steps) in &frontier {
            if *steps < step_budget {
                counts.entry(buf.clone()).or_insert_with(|| vec![0; width])[2 * (k + 1)] += 1;
            }
            if *steps >= step_budget {
                continue;
            }
            for instr in Instr::BODY {
                let mut b = buf.clone();
                let cost = apply(&mut b, instr);
                next.push((b, steps + cost));
            }
        }
        frontier = next;
    }
    let shards: Vec<HashMap<Vec<u8>, Vec<u64>>> = frontier
        .into_par_iter()
        .map(|(mut buf, steps)| {
            let mut local = HashMap::new();
            Walk {
                max_body,
                step_budget,
                counts: &mut local,
                width,
            }
            .visit(&mut buf, steps, shard_depth);
            local
        })
        .collect();
    for shard in shards {
        for (out, c) in shard {
            let e = counts.entry(out).or_insert_with(|| vec![0; width]);
            for (a, b) in e.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(EnumerationIndex::from_counts(max_len, step_budget, counts))
}
