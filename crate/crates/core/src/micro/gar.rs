//! Exhaustive check of the posterior tilt `C 2^{M - Δ}` over every pair of
//! small transducers.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use serde::Serialize;

use super::checks::{ratio_f64, ratio_string};
use super::{Dyadic, EnumerationIndex};
use crate::error::{invalid, AgarError, Result};
use crate::machine::{null_regulator, run_coupled, run_open_loop, CausalTransducer};

pub const MAX_FAMILY_BITS: u32 = 12;
pub const MAX_GAR_HORIZON: usize = 12;

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub code: Vec<u8>,
    pub machine: CausalTransducer,
    /// Index of the behavior class within the family.
    pub class: usize,
    /// Shortest code length among behaviorally identical members.
    pub k_proxy: u32,
}

/// Every transducer whose canonical code has at most `max_bits` bits, with
/// behavior classes computed over all `2^horizon` input sequences.
pub fn machine_family(max_bits: u32, horizon: usize) -> Result<Vec<FamilyMember>> {
    if max_bits > MAX_FAMILY_BITS || horizon > MAX_GAR_HORIZON || horizon == 0 {
        return invalid(format!(
            "family check needs code bits <= {MAX_FAMILY_BITS} and 1 <= N <= {MAX_GAR_HORIZON}"
        ));
    }
    let mut members = Vec::new();
    for len in 1..=max_bits {
        for v in 0u32..(1 << len) {
            let code: Vec<u8> = (0..len).map(|i| ((v >> (len - 1 - i)) & 1) as u8).collect();
            if let Ok(m) = CausalTransducer::deserialize(&code) {
                if m.serialize() == code {
                    members.push((code, m));
                }
            }
        }
    }
    let mut signatures: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut class_of = Vec::with_capacity(members.len());
    let mut class_k: Vec<u32> = Vec::new();
    for (code, m) in &members {
        let mut sig = Vec::with_capacity(horizon << horizon);
        for v in 0u32..(1 << horizon) {
            let inputs: Vec<u8> = (0..horizon).map(|i| ((v >> i) & 1) as u8).collect();
            sig.extend(run_open_loop(m, &inputs));
        }
        let next = signatures.len();
        let class = *signatures.entry(sig).or_insert(next);
        if class == class_k.len() {
            class_k.push(code.len() as u32);
        }
        class_k[class] = class_k[class].min(code.len() as u32);
        class_of.push(class);
    }
    Ok(members
        .into_iter()
        .zip(class_of)
        .map(|((code, machine), class)| FamilyMember {
            code,
            machine,
            class,
            k_proxy: class_k[class],
        })
        .collect())
}

/// `r * 2^e` for a possibly negative exponent.
fn scale_pow2(r: Dyadic, e: i32) -> Dyadic {
    if e >= 0 {
        r * Dyadic::from_integer(1u128 << e)
    } else {
        r / Dyadic::from_integer(1u128 << (-e))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub world: usize,
    pub regulator: usize,
    pub a: u32,
    pub b: u32,
    pub delta: i32,
    pub m: i32,
    pub posterior: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GarReport {
    pub max_code_bits: u32,
    pub horizon: usize,
    pub index_max_len: u32,
    pub family_size: usize,
    pub behavior_classes: usize,
    pub pairs: usize,
    /// Conditioning events `(x, b)`.
    pub events: usize,
    /// Readouts not covered by the index, charged `L + 1` bits.
    pub unindexed_readouts: usize,
    pub c: String,
    pub c_log2: f64,
    pub c_prime: String,
    pub c_prime_log2: f64,
    /// Pairs violating `posterior <= C 2^{M - Δ}` with the fitted `C`.
    pub violations: usize,
    pub tail_violations: usize,
    /// Pairs whose regulator behaves like the null regulator but have Δ != 0.
    pub null_pairs_with_gap: usize,
    pub max_delta: i32,
    #[serde(skip)]
    pub records: Vec<PairRecord>,
}

/// Runs ON and OFF transcripts for every ordered pair in the family,
/// conditions the pair prior `2^{-(|W| + |R|)}` on `(x, b)` and fits the
/// smallest constants `C` and `C'` for the posterior tilt and its tail.
pub fn gar_bound_check(
    max_code_bits: u32,
    horizon: usize,
    index: &EnumerationIndex,
    max_pairs: usize,
) -> Result<GarReport> {
    let family = machine_family(max_code_bits, horizon)?;
    let pairs = family.len() * family.len();
    if pairs > max_pairs {
        return Err(AgarError::Capacity(format!(
            "{pairs} pairs exceed the budget of {max_pairs}"
        )));
    }
    let null = null_regulator();
    let null_sig_class = family
        .iter()
        .find(|m| m.machine.serialize() == null.serialize())
        .map(|m| m.class);
    let weight_den = 2 * max_code_bits;
    let mut off_cache: Vec<(Vec<u8>, u32)> = Vec::with_capacity(family.len());
    let mut unindexed = 0usize;
    for w in &family {
        let y = run_coupled(&w.machine, &null, horizon)?.world_readout;
        let b = index.k_or_beyond(&y);
        if index.k(&y).is_none() {
            unindexed += 1;
        }
        off_cache.push((y, b));
    }
    let mut records = Vec::with_capacity(pairs);
    let mut events: BTreeMap<(Vec<u8>, u32), Vec<usize>> = BTreeMap::new();
    let mut weights = Vec::with_capacity(pairs);
    for (wi, w) in family.iter().enumerate() {
        for (ri, r) in family.iter().enumerate() {
            let x = run_coupled(&w.machine, &r.machine, horizon)?.world_readout;
            let a = index.k_or_beyond(&x);
            if index.k(&x).is_none() {
                unindexed += 1;
            }
            let b = off_cache[wi].1;
            let joint = if w.class == r.class {
                1 + w.k_proxy
            } else {
                1 + w.k_proxy + r.k_proxy
            };
            let m = (w.k_proxy + r.k_proxy) as i32 - joint as i32;
            let bits = (w.code.len() + r.code.len()) as u32;
            weights.push(Dyadic::new(1u128 << (weight_den - bits), 1u128 << weight_den));
            events.entry((x, b)).or_default().push(records.len());
            records.push(PairRecord {
                world: wi,
                regulator: ri,
                a,
                b,
                delta: b as i32 - a as i32,
                m,
                posterior: String::new(),
            });
        }
    }
    let mut c = Dyadic::zero();
    let mut c_prime = Dyadic::zero();
    let mut posteriors = vec![Dyadic::zero(); records.len()];
    for members in events.values() {
        let total: Dyadic = members.iter().map(|&i| weights[i]).sum();
        let delta = records[members[0]].delta;
        for &i in members {
            let post = weights[i] / total;
            posteriors[i] = post;
            c = c.max(scale_pow2(post, delta - records[i].m));
        }
        let min_m = members.iter().map(|&i| records[i].m).min().unwrap_or(0);
        for k in 0..=(delta - min_m).max(0) {
            let tail: Dyadic = members
                .iter()
                .filter(|&&i| records[i].m <= delta - k)
                .map(|&i| posteriors[i])
                .sum();
            c_prime = c_prime.max(scale_pow2(tail, k));
        }
    }
    let mut violations = 0;
    let mut tail_violations = 0;
    for members in events.values() {
        let delta = records[members[0]].delta;
        for &i in members {
            if posteriors[i] > scale_pow2(c, records[i].m - delta) {
                violations += 1;
            }
        }
        let min_m = members.iter().map(|&i| records[i].m).min().unwrap_or(0);
        for k in 0..=(delta - min_m).max(0) {
            let tail: Dyadic = members
                .iter()
                .filter(|&&i| records[i].m <= delta - k)
                .map(|&i| posteriors[i])
                .sum();
            if tail > scale_pow2(c_prime, -k) {
                tail_violations += 1;
            }
        }
    }
    for (rec, post) in records.iter_mut().zip(&posteriors) {
        rec.posterior = ratio_string(post);
    }
    let null_pairs_with_gap = records
        .iter()
        .filter(|r| Some(family[r.regulator].class) == null_sig_class && r.delta != 0)
        .count();
    let classes = family.iter().map(|m| m.class).max().map_or(0, |c| c + 1);
    Ok(GarReport {
        max_code_bits,
        horizon,
        index_max_len: index.max_len(),
        family_size: family.len(),
        behavior_classes: classes,
        pairs,
        events: events.len(),
        unindexed_readouts: unindexed,
        c: ratio_string(&c),
        c_log2: ratio_f64(&c).log2(),
        c_prime: ratio_string(&c_prime),
        c_prime_log2: ratio_f64(&c_prime).log2(),
        violations,
        tail_violations,
        null_pairs_with_gap,
        max_delta: records.iter().map(|r| r.delta).max().unwrap_or(0),
        records,
    })
}
