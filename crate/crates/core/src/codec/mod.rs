//! Upper-bound codelength estimators standing in for prefix complexity, and
//! the quantities built from them (NCD, compression mutual information).

pub mod external;
pub mod lz78;
pub mod lzw;
pub mod mixture;
pub mod quantize;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::{ceil_log2, length_header_len, UNITS_PER_BIT};
use crate::ctm::CtmTable;
use crate::error::{invalid, AgarError, Result};

pub use external::ExternalCompressor;
pub use mixture::MixtureModelClass;
pub use quantize::{gaussian_entropy_rate, quantize, quantize_codes, Quantizer};

const UNITS: u64 = UNITS_PER_BIT as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorId {
    Lz78,
    Lzw,
    Mixture,
    Bdm,
    External,
}

impl std::fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EstimatorId::Lz78 => "lz78",
            EstimatorId::Lzw => "lzw",
            EstimatorId::Mixture => "mixture",
            EstimatorId::Bdm => "bdm",
            EstimatorId::External => "external",
        };
        f.write_str(s)
    }
}

/// One estimator's upper bound on the complexity of one string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLengthReport {
    pub estimator: EstimatorId,
    /// Input length in symbols.
    pub n: u64,
    /// Codelength in 1/64-bit units.
    pub bits_x64: u64,
    pub params: BTreeMap<String, String>,
}

impl CodeLengthReport {
    pub fn bits(&self) -> f64 {
        self.bits_x64 as f64 / UNITS as f64
    }

    pub fn rate(&self) -> f64 {
        if self.n == 0 {
            self.bits()
        } else {
            self.bits() / self.n as f64
        }
    }
}

/// Real-valued bits to fixed-point, rounding up so the result stays an upper bound.
pub fn bits_to_x64(bits: f64) -> u64 {
    (bits * UNITS as f64 - 1e-9).ceil().max(0.0) as u64
}

#[derive(Debug, Clone)]
pub enum Estimator {
    Lz78,
    Lzw,
    Mixture(MixtureModelClass),
    Bdm(Arc<CtmTable>),
    External(ExternalCompressor),
}

impl PartialEq for Estimator {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id() && self.params() == other.params()
    }
}

impl Estimator {
    pub fn id(&self) -> EstimatorId {
        match self {
            Estimator::Lz78 => EstimatorId::Lz78,
            Estimator::Lzw => EstimatorId::Lzw,
            Estimator::Mixture(_) => EstimatorId::Mixture,
            Estimator::Bdm(_) => EstimatorId::Bdm,
            Estimator::External(_) => EstimatorId::External,
        }
    }

    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::new();
        match self {
            Estimator::Lz78 | Estimator::Lzw => {}
            Estimator::Mixture(c) => {
                p.insert("max_order".into(), c.max_order.to_string());
            }
            Estimator::Bdm(t) => {
                p.insert("block_length".into(), t.block_length().to_string());
                p.insert("max_program_bits".into(), t.max_program_bits().to_string());
                p.insert("step_budget".into(), t.step_budget().to_string());
            }
            Estimator::External(e) => {
                p.insert("command".into(), e.command.clone());
                p.insert("version".into(), e.version.clone());
            }
        }
        p
    }

    /// Codelength of `x` in 1/64-bit units.
    pub fn codelength_x64(&self, x: &[u8]) -> Result<u64> {
        Ok(match self {
            Estimator::Lz78 => lz78::codelength_bits(x) * UNITS,
            Estimator::Lzw => lzw::codelength_bits(x) * UNITS,
            Estimator::Mixture(c) => {
                bits_to_x64(length_header_len(x.len()) as f64 + mixture::mixture_bits(x, *c))
            }
            Estimator::Bdm(t) => t.bdm(x)?.bits_x64,
            Estimator::External(e) => e.codelength_bits(x)? * UNITS,
        })
    }

    pub fn codelength(&self, x: &[u8]) -> Result<CodeLengthReport> {
        if let Estimator::Bdm(t) = self {
            return t.bdm(x);
        }
        Ok(CodeLengthReport {
            estimator: self.id(),
            n: x.len() as u64,
            bits_x64: self.codelength_x64(x)?,
            params: self.params(),
        })
    }
}

pub fn lz78_codelength(x: &[u8]) -> CodeLengthReport {
    Estimator::Lz78.codelength(x).expect("lz78 is infallible")
}

pub fn lzw_codelength(x: &[u8]) -> CodeLengthReport {
    Estimator::Lzw.codelength(x).expect("lzw is infallible")
}

pub fn mixture_codelength(x: &[u8], class: MixtureModelClass) -> CodeLengthReport {
    Estimator::Mixture(class)
        .codelength(x)
        .expect("mixture is infallible")
}

/// How a tuple of strings is presented to a single-string estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointCode {
    /// Concatenation with gamma length headers for all but the last part and
    /// `ceil(log2 k!)` flag bits naming the order; minimized over orders.
    Concatenation,
    /// Symbol-wise interleaving of equal-length parts with `ceil(log2 k!)`
    /// flag bits naming the order; minimized over orders.
    Interleaved,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Codelength of the tuple `parts` under `joint`, in 1/64-bit units.
pub fn joint_codelength_x64(parts: &[&[u8]], est: &Estimator, joint: JointCode) -> Result<u64> {
    match parts.len() {
        0 => return invalid("joint code of an empty tuple"),
        1 => return est.codelength_x64(parts[0]),
        _ => {}
    }
    if parts.len() > 6 {
        return invalid("joint codes support at most 6 parts");
    }
    let orders = permutations(parts.len());
    let flag_bits = u64::from(ceil_log2(orders.len() as u64));
    let mut best = u64::MAX;
    for order in orders {
        let cost = match joint {
            JointCode::Concatenation => {
                let mut s = Vec::new();
                let mut header = 0u64;
                for (i, &p) in order.iter().enumerate() {
                    if i + 1 < order.len() {
                        header += length_header_len(parts[p].len());
                    }
                    s.extend_from_slice(parts[p]);
                }
                (header + flag_bits) * UNITS + est.codelength_x64(&s)?
            }
            JointCode::Interleaved => {
                let ordered: Vec<&[u8]> = order.iter().map(|&p| parts[p]).collect();
                let s = crate::bits::interleave(&ordered)?;
                flag_bits * UNITS + est.codelength_x64(&s)?
            }
        };
        best = best.min(cost);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutualInfoEstimate {
    pub c_x_x64: u64,
    pub c_y_x64: u64,
    pub c_joint_x64: u64,
    /// `C(x) + C(y) - C(x, y)`; negative values are estimator noise and kept.
    pub m_hat_x64: i64,
}

impl MutualInfoEstimate {
    pub fn m_hat_bits(&self) -> f64 {
        self.m_hat_x64 as f64 / UNITS as f64
    }
}

/// `M̂(x:y)` with the separator-flagged concatenation joint code.
pub fn mutual_info_estimate(x: &[u8], y: &[u8], est: &Estimator) -> Result<MutualInfoEstimate> {
    mutual_info_tuples(&[x], &[y], est, JointCode::Concatenation)
}

/// `M̂(X:Y)` for tuples of strings: `C(X) + C(Y) - C(X ∪ Y)`.
pub fn mutual_info_tuples(
    x: &[&[u8]],
    y: &[&[u8]],
    est: &Estimator,
    joint: JointCode,
) -> Result<MutualInfoEstimate> {
    if x.iter().chain(y).any(|p| p.is_empty()) {
        return invalid("mutual information needs nonempty strings");
    }
    let c_x = joint_codelength_x64(x, est, joint)?;
    let c_y = joint_codelength_x64(y, est, joint)?;
    let all: Vec<&[u8]> = x.iter().chain(y).copied().collect();
    let c_xy = joint_codelength_x64(&all, est, joint)?;
    Ok(MutualInfoEstimate {
        c_x_x64: c_x,
        c_y_x64: c_y,
        c_joint_x64: c_xy,
        m_hat_x64: c_x as i64 + c_y as i64 - c_xy as i64,
    })
}

/// Normalized compression distance with `C(xy)` minimized over both orders.
pub fn ncd(x: &[u8], y: &[u8], est: &Estimator) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return invalid("ncd needs nonempty strings");
    }
    let cx = est.codelength_x64(x)?;
    let cy = est.codelength_x64(y)?;
    let xy: Vec<u8> = x.iter().chain(y).copied().collect();
    let yx: Vec<u8> = y.iter().chain(x).copied().collect();
    let cxy = est.codelength_x64(&xy)?.min(est.codelength_x64(&yx)?);
    let denom = cx.max(cy);
    if denom == 0 {
        return Err(AgarError::Degenerate(
            "both strings compress to 0 bits".into(),
        ));
    }
    Ok((cxy as f64 - cx.min(cy) as f64) / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::random_bits;

    #[test]
    fn report_json_shape() {
        let r = lz78_codelength(&[0; 10]);
        assert_eq!(r.bits_x64, 16 * 64);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["estimator"], "lz78");
        assert_eq!(v["n"], 10);
        assert_eq!(v["bits_x64"], 1024);
        assert!(v["params"].is_object());
    }

    #[test]
    fn concatenation_joint_of_two_uses_one_flag_bit() {
        let x = random_bits(1, 50);
        let y = random_bits(2, 70);
        let est = Estimator::Lz78;
        let xy: Vec<u8> = x.iter().chain(&y).copied().collect();
        let yx: Vec<u8> = y.iter().chain(&x).copied().collect();
        let expected = ((length_header_len(50) + 1) * 64 + est.codelength_x64(&xy).unwrap())
            .min((length_header_len(70) + 1) * 64 + est.codelength_x64(&yx).unwrap());
        assert_eq!(
            joint_codelength_x64(&[&x, &y], &est, JointCode::Concatenation).unwrap(),
            expected
        );
    }

    #[test]
    fn ncd_independent_strings_are_far() {
        let est = Estimator::Lz78;
        for seed in 0..20 {
            let x = random_bits(2 * seed, 4096);
            let y = random_bits(2 * seed + 1, 4096);
            let d = ncd(&x, &y, &est).unwrap();
            assert!(d >= 0.85, "seed {seed}: {d}");
        }
        assert!(ncd(&[], &[1], &est).is_err());
    }

    #[test]
    fn ncd_measurements() {
        let x = random_bits(11, 4096);
        let z = vec![0u8; 4096];
        for est in [Estimator::Lz78, Estimator::Lzw] {
            let self_d = ncd(&x, &x, &est).unwrap();
            let zero_d = ncd(&z, &z, &est).unwrap();
            eprintln!("{:?}: ncd(x,x) = {self_d:.4}, ncd(0,0) = {zero_d:.4}", est.id());
        }
    }

    #[test]
    fn mutual_info_measurements() {
        let x = random_bits(21, 8192);
        let y = random_bits(22, 8192);
        let z = vec![0u8; 8192];
        for est in [Estimator::Lz78, Estimator::Lzw] {
            let copy = mutual_info_estimate(&x, &x, &est).unwrap();
            let indep = mutual_info_estimate(&x, &y, &est).unwrap();
            let zeros = mutual_info_estimate(&z, &z, &est).unwrap();
            eprintln!(
                "{:?}: copy {:.1} of C(x) {:.1}, indep {:.1}, zeros {:.1}",
                est.id(),
                copy.m_hat_bits(),
                copy.c_x_x64 as f64 / 64.0,
                indep.m_hat_bits(),
                zeros.m_hat_bits()
            );
        }
    }

    #[test]
    fn mutual_info_may_be_negative_and_is_not_clipped() {
        let est = Estimator::Lz78;
        let x = random_bits(5, 64);
        let y = random_bits(6, 64);
        let m = mutual_info_estimate(&x, &y, &est).unwrap();
        assert_eq!(m.m_hat_x64, m.c_x_x64 as i64 + m.c_y_x64 as i64 - m.c_joint_x64 as i64);
    }
}
