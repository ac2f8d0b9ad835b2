//! LZW over the binary alphabet with initial dictionary `{0, 1}`.
//!
//! Each emitted index costs `ceil(log2(dict_size))` bits where `dict_size` is
//! the encoder's dictionary size at emission time, so the `k`-th code uses
//! `ceil(log2(k + 1))` bits. The stream starts with gamma(|x| + 1).

use crate::bits::{ceil_log2, length_header_len, BitReader, BitWriter};
use crate::error::{AgarError, Result};

/// Dictionary indices emitted for `x`, in order.
pub fn codes(x: &[u8]) -> Vec<u32> {
    let Some((&first, rest)) = x.split_first() else {
        return Vec::new();
    };
    let mut children: Vec<[u32; 2]> = vec![[u32::MAX; 2]; 2];
    let mut out = Vec::new();
    let mut cur = u32::from(first & 1);
    for &b in rest {
        let b = b & 1;
        let child = children[cur as usize][b as usize];
        if child != u32::MAX {
            cur = child;
        } else {
            out.push(cur);
            let id = children.len() as u32;
            children.push([u32::MAX; 2]);
            children[cur as usize][b as usize] = id;
            cur = u32::from(b);
        }
    }
    out.push(cur);
    out
}

fn code_width(k: u64) -> u32 {
    ceil_log2(k + 1)
}

/// Exact length of [`encode`]'s output.
pub fn codelength_bits(x: &[u8]) -> u64 {
    let k = codes(x).len() as u64;
    length_header_len(x.len()) + (1..=k).map(|i| u64::from(code_width(i))).sum::<u64>()
}

pub fn encode(x: &[u8]) -> Vec<u8> {
    let mut w = BitWriter::new();
    w.write_gamma(x.len() as u64 + 1);
    for (i, &c) in codes(x).iter().enumerate() {
        w.write_uint(u64::from(c), code_width(i as u64 + 1));
    }
    w.into_bits()
}

pub fn decode(bits: &[u8]) -> Result<(Vec<u8>, usize)> {
    let mut r = BitReader::new(bits);
    let n = (r.read_gamma()? - 1) as usize;
    let mut dict: Vec<Vec<u8>> = vec![vec![0], vec![1]];
    let mut out = Vec::with_capacity(n);
    let mut prev: Option<usize> = None;
    let mut k = 1u64;
    while out.len() < n {
        let code = r.read_uint(code_width(k))? as usize;
        let entry = if code < dict.len() {
            dict[code].clone()
        } else if code == dict.len() && prev.is_some() {
            let p = &dict[prev.unwrap()];
            let mut e = p.clone();
            e.push(p[0]);
            e
        } else {
            return Err(AgarError::Decode(format!("code {code} not in dictionary")));
        };
        if let Some(p) = prev {
            let mut added = dict[p].clone();
            added.push(entry[0]);
            dict.push(added);
        }
        out.extend_from_slice(&entry);
        prev = Some(code);
        k += 1;
    }
    if out.len() != n {
        return Err(AgarError::Decode("code overruns declared length".into()));
    }
    Ok((out, r.position()))
}
