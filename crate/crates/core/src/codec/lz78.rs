//! LZ78 incremental parsing with an exact, decodable bit accounting.
//!
//! Stream layout: gamma(|x| + 1), then for phrase `i = 1, 2, ...` the index of
//! its longest previously seen prefix phrase in `ceil(log2 i)` bits followed by
//! one literal bit. A trailing partial phrase (one that already exists in the
//! dictionary when input ends) is sent as its parent index plus last symbol.

use crate::bits::{ceil_log2, length_header_len, BitReader, BitWriter};
use crate::error::{AgarError, Result};

const NONE: u32 = 0;

/// A phrase: index of its prefix phrase and the appended literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phrase {
    pub prefix: u32,
    pub literal: u8,
}

/// Incremental parse of `x` into LZ78 phrases.
pub fn parse(x: &[u8]) -> Vec<Phrase> {
    // children[node] = [child on 0, child on 1]; node 0 is the empty phrase.
    let mut children: Vec<[u32; 2]> = vec![[NONE; 2]];
    let mut phrases = Vec::new();
    let mut node = 0u32;
    let mut last_parent = 0u32;
    for &b in x {
        let b = b & 1;
        let child = children[node as usize][b as usize];
        if child != NONE {
            last_parent = node;
            node = child;
        } else {
            let id = children.len() as u32;
            children.push([NONE; 2]);
            children[node as usize][b as usize] = id;
            phrases.push(Phrase { prefix: node, literal: b });
            node = 0;
        }
    }
    if node != 0 {
        let literal = if children[last_parent as usize][0] == node { 0 } else { 1 };
        phrases.push(Phrase { prefix: last_parent, literal });
    }
    phrases
}

/// Exact length of [`encode`]'s output.
pub fn codelength_bits(x: &[u8]) -> u64 {
    let p = parse(x).len() as u64;
    length_header_len(x.len()) + (1..=p).map(|i| u64::from(ceil_log2(i)) + 1).sum::<u64>()
}

pub fn encode(x: &[u8]) -> Vec<u8> {
    let mut w = BitWriter::new();
    w.write_gamma(x.len() as u64 + 1);
    for (i, ph) in parse(x).iter().enumerate() {
        let i = i as u64 + 1;
        w.write_uint(u64::from(ph.prefix), ceil_log2(i));
        w.push(ph.literal);
    }
    w.into_bits()
}

/// Decodes one LZ78 stream from the front of `bits`, returning the string and
/// the number of bits consumed.
pub fn decode(bits: &[u8]) -> Result<(Vec<u8>, usize)> {
    let mut r = BitReader::new(bits);
    let n = (r.read_gamma()? - 1) as usize;
    let mut nodes: Vec<(u32, u8)> = vec![(0, 0)];
    let mut out = Vec::with_capacity(n);
    let mut scratch = Vec::new();
    let mut i = 1u64;
    while out.len() < n {
        let prefix = r.read_uint(ceil_log2(i))?;
        if prefix >= i {
            return Err(AgarError::Decode(format!("phrase {i} refers to {prefix}")));
        }
        let literal = r.read_bit()?;
        scratch.clear();
        let mut cur = prefix as usize;
        while cur != 0 {
            let (parent, sym) = nodes[cur];
            scratch.push(sym);
            cur = parent as usize;
        }
        out.extend(scratch.iter().rev());
        out.push(literal);
        nodes.push((prefix as u32, literal));
        i += 1;
    }
    if out.len() != n {
        return Err(AgarError::Decode("phrase overruns declared length".into()));
    }
    Ok((out, r.position()))
}
