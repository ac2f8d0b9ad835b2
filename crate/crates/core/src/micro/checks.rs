//! Exact checks of the coding-theorem family of inequalities on an index.

use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::{enumerate_programs, Dyadic, EnumerationIndex, MicroProgram};
use crate::bits::xor_bits;
use crate::error::{invalid, Result};

pub fn ratio_string(r: &Dyadic) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn ratio_f64(r: &Dyadic) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn pow2(k: u32) -> Dyadic {
    Dyadic::from_integer(1u128 << k)
}

fn inv_pow2(k: u32) -> Dyadic {
    Dyadic::new(1, 1u128 << k)
}

/// `P(p | x) = 2^{-|p|} / m_L(x)`.
pub fn posterior(code: &[u8], x: &[u8], index: &EnumerationIndex) -> Result<Dyadic> {
    let p = MicroProgram::run(code, index.step_budget())?;
    if p.code.len() as u32 > index.max_len() {
        return invalid(format!(
            "program of {} bits is outside the index (L = {})",
            p.code.len(),
            index.max_len()
        ));
    }
    if p.output.as_deref() != Some(x) {
        return invalid("program does not print x within the step budget");
    }
    let m = index.mass(x);
    Ok(inv_pow2(p.length()) / m)
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationReport {
    pub outputs: usize,
    pub programs: usize,
    /// Outputs whose program posteriors do not sum to exactly 1.
    pub failures: Vec<String>,
}

/// Re-runs every program independently of the index and sums posteriors per output.
pub fn posterior_normalization(index: &EnumerationIndex) -> Result<NormalizationReport> {
    let progs = enumerate_programs(index.max_len(), index.step_budget())?;
    let mut sums: HashMap<Vec<u8>, Dyadic> = HashMap::new();
    let mut programs = 0;
    for p in progs {
        if let Some(out) = p.output {
            programs += 1;
            let post = inv_pow2(p.code.len() as u32) / index.mass(&out);
            *sums.entry(out).or_insert_with(Dyadic::zero) += post;
        }
    }
    let mut failures: Vec<String> = sums
        .iter()
        .filter(|(_, s)| !s.is_one())
        .map(|(x, _)| crate::bits::format_bits(x))
        .collect();
    if sums.len() != index.len() {
        failures.push(format!(
            "index has {} outputs but direct runs produce {}",
            index.len(),
            sums.len()
        ));
    }
    failures.sort();
    Ok(NormalizationReport {
        outputs: sums.len(),
        programs,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingConstants {
    pub c1: Dyadic,
    pub c2: Dyadic,
}

impl CodingConstants {
    /// `c2 / c1`.
    pub fn ratio(&self) -> Dyadic {
        self.c2 / self.c1
    }
}

/// `c1 = min_x m_L(x) 2^{K_L(x)}` and `c2 = max_x m_L(x) 2^{K_L(x)}`.
pub fn coding_constants(index: &EnumerationIndex) -> Result<CodingConstants> {
    let mut it = index
        .records()
        .iter()
        .map(|r| Dyadic::new(r.mass_num() << r.k(), index.denominator()));
    let Some(first) = it.next() else {
        return invalid("coding constants of an empty index");
    };
    let (c1, c2) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(CodingConstants { c1, c2 })
}

/// Outputs violating `c1 2^{-K} <= m <= c2 2^{-K}`.
pub fn sandwich_violations(index: &EnumerationIndex, cc: &CodingConstants) -> Vec<Vec<u8>> {
    index
        .records()
        .iter()
        .filter(|r| {
            let m = Dyadic::new(r.mass_num(), index.denominator());
            let lo = cc.c1 * inv_pow2(r.k());
            let hi = cc.c2 * inv_pow2(r.k());
            m < lo || m > hi
        })
        .map(|r| r.output.clone())
        .collect()
}

#[derive(Debug, Clone)]
pub struct TailProfile {
    pub k_min: u32,
    /// `tails[k] = P{|p| >= K + k | x}` for `k = 0..=L-K`.
    pub tails: Vec<Dyadic>,
    /// `2 (c2/c1) 2^{-k}` for the same `k`.
    pub bounds: Vec<Dyadic>,
    /// Lengths strictly between `K` and the longest program with no program
    /// printing x.
    pub gap_lengths: Vec<u32>,
}

impl TailProfile {
    pub fn violations(&self) -> Vec<u32> {
        (0..self.tails.len() as u32)
            .filter(|&k| self.tails[k as usize] > self.bounds[k as usize])
            .collect()
    }
}

pub fn tail_profile(x: &[u8], index: &EnumerationIndex, cc: &CodingConstants) -> Result<TailProfile> {
    let Some(rec) = index.get(x) else {
        return invalid("tail profile of an unindexed string");
    };
    let l = index.max_len();
    let k_min = rec.k();
    let mass = rec.mass_num();
    let scale = Dyadic::from_integer(2) * cc.ratio();
    let mut tails = Vec::new();
    let mut bounds = Vec::new();
    for k in 0..=(l - k_min) {
        let from = (k_min + k) as usize;
        let num: u128 = rec.counts[from..]
            .iter()
            .enumerate()
            .map(|(j, &c)| u128::from(c) << (l as usize - from - j))
            .sum();
        tails.push(Dyadic::new(num, mass));
        bounds.push(scale * inv_pow2(k));
    }
    let last = rec.counts.iter().rposition(|&c| c > 0).unwrap_or(0) as u32;
    let gap_lengths = (k_min + 1..last)
        .filter(|&len| rec.counts[len as usize] == 0)
        .collect();
    Ok(TailProfile {
        k_min,
        tails,
        bounds,
        gap_lengths,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityReport {
    pub r: u32,
    pub c: f64,
    pub c_prime: f64,
    pub qualifying: usize,
    pub violations: usize,
    /// Smallest `c'` that would make every qualifying output pass with this `c`.
    pub required_c_prime: Option<f64>,
    /// Outputs violating `N_{<=L}(x) <= m_L(x) 2^L`.
    pub weight_violations: usize,
}

/// Checks `K_L(x) <= L - r + c log2 L + c'` for every x with `N_{<=L}(x) >= 2^r`.
pub fn multiplicity_check(
    index: &EnumerationIndex,
    r: u32,
    c: f64,
    c_prime: f64,
) -> Result<MultiplicityReport> {
    if r == 0 {
        return invalid("multiplicity check needs r >= 1");
    }
    let l = index.max_len();
    let slack = c * f64::from(l.max(1)).log2();
    let mut qualifying = 0;
    let mut violations = 0;
    let mut required: Option<f64> = None;
    let mut weight_violations = 0;
    for rec in index.records() {
        if u128::from(rec.total()) > rec.mass_num() {
            weight_violations += 1;
        }
        if r >= 64 || rec.total() < (1u64 << r) {
            continue;
        }
        qualifying += 1;
        let need = f64::from(rec.k()) - f64::from(l) + f64::from(r) - slack;
        required = Some(required.map_or(need, |v: f64| v.max(need)));
        if need > c_prime {
            violations += 1;
        }
    }
    Ok(MultiplicityReport {
        r,
        c,
        c_prime,
        qualifying,
        violations,
        required_c_prime: required,
        weight_violations,
    })
}

/// Smallest `c'` for which the multiplicity inequality holds for every r at
/// once with the given `c`; `None` when no output has two or more programs.
pub fn fit_multiplicity_offset(index: &EnumerationIndex, c: f64) -> Option<f64> {
    let l = index.max_len();
    index
        .records()
        .iter()
        .filter(|rec| rec.total() >= 2)
        .map(|rec| {
            let r = 63 - rec.total().leading_zeros();
            f64::from(rec.k()) - f64::from(l) + f64::from(r) - c * f64::from(l.max(1)).log2()
        })
        .reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountingCheck {
    pub n: usize,
    pub k: u32,
    pub count: u64,
    /// `2^{k+1}`, saturating.
    pub bound: u64,
}

impl CountingCheck {
    pub fn holds(&self) -> bool {
        self.count <= self.bound
    }
}

/// Number of indexed `n`-bit strings with `K_L <= k` against `2^{k+1}`.
pub fn counting_check(index: &EnumerationIndex, n: usize, k: u32) -> CountingCheck {
    let count = index
        .records()
        .iter()
        .filter(|r| r.output.len() == n && r.k() <= k)
        .count() as u64;
    let bound = if k + 1 >= 64 { u64::MAX } else { 1u64 << (k + 1) };
    CountingCheck { n, k, count, bound }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChanceRow {
    pub delta: u32,
    /// Fraction of all `u` with `K_L(z xor u) <= n - delta`.
    pub fraction: Dyadic,
    /// `2^{1-delta}`.
    pub bound: Dyadic,
}

impl ChanceRow {
    pub fn holds(&self) -> bool {
        self.fraction <= self.bound
    }
}

/// Exhaustive sweep over every `u` of length `|z|`; unindexed readouts
/// count as more complex than `L`.
pub fn chance_simplification(index: &EnumerationIndex, z: &[u8]) -> Result<Vec<ChanceRow>> {
    let n = z.len();
    if n == 0 || n > 20 {
        return invalid("chance sweep needs 1 <= |z| <= 20");
    }
    let mut ks = Vec::with_capacity(1 << n);
    for v in 0u32..(1 << n) {
        let u: Vec<u8> = (0..n).map(|i| ((v >> (n - 1 - i)) & 1) as u8).collect();
        ks.push(index.k_or_beyond(&xor_bits(z, &u)?));
    }
    let total = 1u128 << n;
    Ok((0..=n as u32)
        .map(|delta| {
            let limit = n as u32 - delta;
            let hits = ks.iter().filter(|&&k| k <= limit).count() as u128;
            let bound = if delta == 0 { pow2(1) } else { inv_pow2(delta - 1) };
            ChanceRow {
                delta,
                fraction: Dyadic::new(hits, total),
                bound,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micro::{assemble, enumerate, Instr};

    #[test]
    fn kraft_below_one() {
        for l in [2, 8, 16] {
            let idx = enumerate(l, 10_000).unwrap();
            assert!(idx.kraft_sum() <= Dyadic::one());
        }
        // 1/4 * sum_{k<8} (3/4)^k at L = 16.
        let idx = enumerate(16, 10_000).unwrap();
        let expected: Dyadic = (0..8u32)
            .map(|k| Dyadic::new(3u128.pow(k), 4u128.pow(k + 1)))
            .sum();
        assert_eq!(idx.kraft_sum(), expected);
    }

    #[test]
    fn posterior_single_support_and_errors() {
        let idx = enumerate(4, 100).unwrap();
        let code = assemble(&[Instr::Emit0]);
        assert_eq!(posterior(&code, &[0], &idx).unwrap(), Dyadic::one());
        assert!(posterior(&code, &[1], &idx).is_err());
        let long = assemble(&[Instr::Emit0, Instr::Dbl]);
        assert!(posterior(&long, &[0, 0], &idx).is_err());
    }

    #[test]
    fn normalization_exact() {
        let idx = enumerate(14, 10_000).unwrap();
        let rep = posterior_normalization(&idx).unwrap();
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        assert_eq!(rep.outputs, idx.len());
    }

    #[test]
    fn sandwich_and_c1() {
        let idx = enumerate(16, 10_000).unwrap();
        let cc = coding_constants(&idx).unwrap();
        assert!(cc.c1 >= Dyadic::one());
        assert!(sandwich_violations(&idx, &cc).is_empty());
    }

    #[test]
    fn tail_starts_at_one_and_respects_bound() {
        let idx = enumerate(16, 10_000).unwrap();
        let cc = coding_constants(&idx).unwrap();
        for rec in idx.records() {
            let t = tail_profile(&rec.output, &idx, &cc).unwrap();
            assert!(t.tails[0].is_one());
            assert!(t.violations().is_empty());
        }
    }

    #[test]
    fn longer_program_posterior_bounded() {
        let idx = enumerate(16, 10_000).unwrap();
        let cc = coding_constants(&idx).unwrap();
        // "0": EMIT0 HALT is 4 bits; DBL DBL EMIT0 HALT is 8 bits.
        let code = assemble(&[Instr::Dbl, Instr::Dbl, Instr::Emit0]);
        let post = posterior(&code, &[0], &idx).unwrap();
        assert!(post <= Dyadic::new(1, 16) / cc.c1);
    }

    #[test]
    fn counting_small_cases() {
        let idx = enumerate(16, 10_000).unwrap();
        for k in 0..=20 {
            assert!(counting_check(&idx, 8, k).holds());
        }
        let c = counting_check(&idx, 8, 10);
        assert!(c.count <= 1u64 << 8);
    }

    #[test]
    fn multiplicity_vacuous_for_huge_r() {
        let idx = enumerate(10, 10_000).unwrap();
        let rep = multiplicity_check(&idx, 30, 1.0, 4.0).unwrap();
        assert_eq!(rep.qualifying, 0);
        assert!(multiplicity_check(&idx, 0, 1.0, 4.0).is_err());
    }
}
