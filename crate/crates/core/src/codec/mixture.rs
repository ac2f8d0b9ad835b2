//! Bayes mixture over binary Markov orders `0..=D`, each a Krichevsky–Trofimov
//! (add-1/2) sequential predictor. Only the ideal codelength is computed.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const MAX_ORDER: u8 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MixtureModelClass {
    pub max_order: u8,
}

impl MixtureModelClass {
    pub fn new(max_order: u8) -> Result<Self> {
        if max_order > MAX_ORDER {
            return invalid(format!("mixture order {max_order} exceeds {MAX_ORDER}"));
        }
        Ok(Self { max_order })
    }

    /// `log2 π(d)`: `2^-(d+1)` for `d < D`, and the remaining `2^-D` on `D`.
    pub fn prior_log2(&self, order: u8) -> f64 {
        assert!(order <= self.max_order);
        if order == self.max_order {
            -f64::from(order)
        } else {
            -f64::from(order) - 1.0
        }
    }
}

/// `log2 P_d(x)` for every order `d = 0..=max_order` in a single pass.
/// Contexts before the start of `x` are read as zeros.
pub fn order_log2_probs(x: &[u8], max_order: u8) -> Vec<f64> {
    let orders = usize::from(max_order) + 1;
    let mut counts: Vec<Vec<[u32; 2]>> = (0..orders).map(|d| vec![[0; 2]; 1 << d]).collect();
    let mut logp = vec![0.0f64; orders];
    let mut history = 0usize;
    for &b in x {
        let b = usize::from(b & 1);
        for (d, table) in counts.iter_mut().enumerate() {
            let ctx = history & ((1 << d) - 1);
            let c = &mut table[ctx];
            let p = (f64::from(c[b]) + 0.5) / (f64::from(c[0] + c[1]) + 1.0);
            logp[d] += p.log2();
            c[b] += 1;
        }
        history = (history << 1) | b;
    }
    logp
}

/// Closed-form `log2` of the KT probability of a string with `zeros` zeros
/// and `ones` ones under the order-0 model.
pub fn kt_order0_log2(zeros: u64, ones: u64) -> f64 {
    let mut acc = 0.0;
    for k in 0..zeros {
        acc += (k as f64 + 0.5).log2();
    }
    for k in 0..ones {
        acc += (k as f64 + 0.5).log2();
    }
    for t in 0..zeros + ones {
        acc -= (t as f64 + 1.0).log2();
    }
    acc
}

/// `-log2 Σ_d π(d) P_d(x)` in bits (real-valued).
pub fn mixture_bits(x: &[u8], class: MixtureModelClass) -> f64 {
    let terms: Vec<f64> = order_log2_probs(x, class.max_order)
        .into_iter()
        .enumerate()
        .map(|(d, lp)| lp + class.prior_log2(d as u8))
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp2()).sum();
    -(max + sum.log2())
}
