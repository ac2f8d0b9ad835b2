//! Paired ON/OFF episodes, sign-flip permutation tests, compression mutual
//! information and the XOR synergy demonstration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{random_bits, xor_bits, UNITS_PER_BIT};
use crate::codec::{mutual_info_estimate, mutual_info_tuples, Estimator, EstimatorId, JointCode};
use crate::error::{invalid, AgarError, Result};
use crate::machine::{null_regulator, run_coupled, Describe};
use crate::worlds::{build_regulator, episode_seed, RegulatorKind, WorldSpec};

pub const DEFAULT_VERDICT_THRESHOLD_BITS: f64 = 8.0;
pub const DEFAULT_PERMUTATION_ITERATIONS: u64 = 10_000;
const EXHAUSTIVE_LIMIT: usize = 16;
pub const VERDICT_DISFAVORED: &str = "low-M explanations exponentially disfavored";
pub const VERDICT_INCONCLUSIVE: &str = "inconclusive";

fn x64_to_bits(v: i64) -> f64 {
    v as f64 / UNITS_PER_BIT as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    #[serde(skip)]
    pub horizon: usize,
    pub a_x64: u64,
    pub b_x64: u64,
    pub delta_x64: i64,
    #[serde(skip)]
    pub estimator: Option<EstimatorId>,
    /// Digest of what the ON and OFF legs share: world, horizon, estimator.
    #[serde(skip)]
    pub legs_fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct ContrastConfig {
    pub world: WorldSpec,
    pub regulator: RegulatorKind,
    pub horizon: usize,
    pub estimator: Estimator,
    pub seeds: Vec<u64>,
    pub permutation_iterations: u64,
    pub permutation_seed: u64,
    pub verdict_threshold_bits: f64,
}

impl ContrastConfig {
    pub fn new(
        world: WorldSpec,
        regulator: RegulatorKind,
        horizon: usize,
        estimator: Estimator,
        seeds: Vec<u64>,
    ) -> Self {
        ContrastConfig {
            world,
            regulator,
            horizon,
            estimator,
            seeds,
            permutation_iterations: DEFAULT_PERMUTATION_ITERATIONS,
            permutation_seed: 0,
            verdict_threshold_bits: DEFAULT_VERDICT_THRESHOLD_BITS,
        }
    }

    /// SHA-256 over every parameter that affects the report.
    pub fn fingerprint(&self) -> String {
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        let doc = serde_json::json!({
            "world": self.world,
            "regulator": self.regulator,
            "horizon": self.horizon,
            "estimator": self.estimator.id(),
            "estimator_params": self.estimator.params(),
            "seeds": seeds,
            "permutation_iterations": self.permutation_iterations,
            "permutation_seed": self.permutation_seed,
            "verdict_threshold_bits": self.verdict_threshold_bits,
        });
        hex_digest(doc.to_string().as_bytes())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub config_fingerprint: String,
    pub estimator: EstimatorId,
    pub estimator_params: std::collections::BTreeMap<String, String>,
    pub world: String,
    pub regulator: String,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub episodes: Vec<EpisodeResult>,
    pub delta_sum_x64: i64,
    /// Mean of the episode gaps, rounded toward negative infinity.
    pub mean_delta_x64: i64,
    pub median_delta_x64: i64,
    pub p_value: f64,
    /// `M̂(W:R)` between the serialized world and regulator of the first episode.
    pub m_hat_x64: Option<i64>,
    /// Mean over episodes of `M̂(x:u)` between ON readout and regulator output.
    pub m_hat_transcripts_x64: Option<i64>,
    /// `m_hat - mean_delta` in bits.
    pub bound_log2: Option<f64>,
    pub verdict: String,
}

impl ContrastReport {
    pub fn mean_delta_bits(&self) -> f64 {
        self.delta_sum_x64 as f64 / self.episodes.len() as f64 / UNITS_PER_BIT as f64
    }

    pub fn deltas(&self) -> Vec<i64> {
        self.episodes.iter().map(|e| e.delta_x64).collect()
    }

    /// Checks the same-estimator and pairing discipline of every episode.
    pub fn validate(&self) -> Result<()> {
        if self.episodes.is_empty() {
            return invalid("report without episodes");
        }
        if !(0.0..=1.0).contains(&self.p_value) {
            return invalid(format!("p-value {} outside [0, 1]", self.p_value));
        }
        for e in &self.episodes {
            if e.estimator.is_some_and(|id| id != self.estimator) {
                return invalid(format!("episode {} used a different estimator", e.seed));
            }
            if e.delta_x64 != e.b_x64 as i64 - e.a_x64 as i64 {
                return invalid(format!("episode {} gap is not b - a", e.seed));
            }
        }
        Ok(())
    }

    pub fn episodes_csv(&self) -> String {
        let mut s = String::from("seed,a_x64,b_x64,delta_x64\n");
        for e in &self.episodes {
            s.push_str(&format!("{},{},{},{}\n", e.seed, e.a_x64, e.b_x64, e.delta_x64));
        }
        s
    }
}

fn regulator_label(kind: &RegulatorKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned))
        .unwrap_or_else(|| "regulator".into())
}

fn run_episode(cfg: &ContrastConfig, seed: u64) -> Result<(EpisodeResult, Option<i64>)> {
    let world = cfg.world.build(seed, cfg.horizon)?;
    let regulator = build_regulator(&cfg.regulator, &world.readout_context(cfg.horizon))?;
    let on = run_coupled(&world, &regulator, cfg.horizon)?;
    let off = run_coupled(&world, &null_regulator(), cfg.horizon)?;
    let leg = |desc: &[u8]| {
        let mut h = Sha256::new();
        h.update(desc);
        h.update(cfg.horizon.to_le_bytes());
        h.update(serde_json::to_vec(&(cfg.estimator.id(), cfg.estimator.params())).unwrap_or_default());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect::<String>()
    };
    let desc = world.description();
    let (on_fp, off_fp) = (leg(&desc), leg(&desc));
    if on_fp != off_fp {
        return Err(AgarError::InvalidArgument("ON and OFF legs differ".into()));
    }
    let a = cfg.estimator.codelength_x64(&on.world_readout)?;
    let b = cfg.estimator.codelength_x64(&off.world_readout)?;
    let m_xu = mutual_info_estimate(&on.world_readout, &on.regulator_output, &cfg.estimator)
        .ok()
        .map(|m| m.m_hat_x64);
    Ok((
        EpisodeResult {
            seed,
            horizon: cfg.horizon,
            a_x64: a,
            b_x64: b,
            delta_x64: b as i64 - a as i64,
            estimator: Some(cfg.estimator.id()),
            legs_fingerprint: on_fp,
        },
        m_xu,
    ))
}

/// Runs every seed's ON (regulator) and OFF (null) leg on the same world
/// instance with the same estimator and aggregates the gaps.
pub fn run_contrast(cfg: &ContrastConfig) -> Result<ContrastReport> {
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return invalid("contrast needs at least one seed");
    }
    if cfg.horizon == 0 {
        return invalid("horizon must be at least 1");
    }
    let results: Vec<(EpisodeResult, Option<i64>)> = seeds
        .par_iter()
        .map(|&s| run_episode(cfg, s))
        .collect::<Result<_>>()?;
    let (episodes, m_xu): (Vec<EpisodeResult>, Vec<Option<i64>>) = results.into_iter().unzip();
    let deltas: Vec<i64> = episodes.iter().map(|e| e.delta_x64).collect();
    let n = deltas.len() as i64;
    let sum: i64 = deltas.iter().sum();
    let mut sorted = deltas.clone();
    sorted.sort_unstable();
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]).div_euclid(2)
    };
    let p_value = sign_flip_p_value(&deltas, cfg.permutation_iterations, cfg.permutation_seed);

    let first = cfg.world.build(seeds[0], cfg.horizon)?;
    let reg = build_regulator(&cfg.regulator, &first.readout_context(cfg.horizon))?;
    let m_hat = mutual_info_estimate(&first.description(), &reg.serialize(), &cfg.estimator)
        .ok()
        .map(|m| m.m_hat_x64);
    let m_hat_transcripts = m_xu
        .iter()
        .copied()
        .collect::<Option<Vec<i64>>>()
        .map(|v| v.iter().sum::<i64>().div_euclid(v.len() as i64));
    let mean = sum.div_euclid(n);
    let mean_bits = sum as f64 / n as f64 / UNITS_PER_BIT as f64;
    let bound_log2 = m_hat.map(|m| x64_to_bits(m) - mean_bits);
    let summary = bound_summary(m_hat.map(x64_to_bits), mean_bits, cfg.verdict_threshold_bits);
    let report = ContrastReport {
        config_fingerprint: cfg.fingerprint(),
        estimator: cfg.estimator.id(),
        estimator_params: cfg.estimator.params(),
        world: cfg.world.name().into(),
        regulator: regulator_label(&cfg.regulator),
        horizon: cfg.horizon,
        episodes,
        delta_sum_x64: sum,
        mean_delta_x64: mean,
        median_delta_x64: median,
        p_value,
        m_hat_x64: m_hat,
        m_hat_transcripts_x64: m_hat_transcripts,
        bound_log2,
        verdict: summary.verdict,
    };
    report.validate()?;
    Ok(report)
}

/// One-sided sign-flip test of `mean(deltas) > 0`, exhaustive for at most 16
/// episodes and otherwise `(1 + hits) / (iterations + 1)` over seeded draws.
pub fn permutation_test(deltas: &[i64], iterations: u64, seed: u64) -> Result<f64> {
    if deltas.len() < 2 {
        return invalid("permutation test needs at least 2 episodes");
    }
    if deltas.len() > EXHAUSTIVE_LIMIT && iterations == 0 {
        return invalid("sampled permutation test needs iterations >= 1");
    }
    Ok(sign_flip_p_value(deltas, iterations, seed))
}

fn sign_flip_p_value(deltas: &[i64], iterations: u64, seed: u64) -> f64 {
    let observed: i64 = deltas.iter().sum();
    if deltas.iter().all(|&d| d == 0) {
        return 1.0;
    }
    let n = deltas.len();
    if n <= EXHAUSTIVE_LIMIT {
        let total = 1u64 << n;
        let hits = (0..total)
            .filter(|mask| {
                let s: i64 = deltas
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| if mask >> i & 1 == 1 { -d } else { d })
                    .sum();
                s >= observed
            })
            .count() as u64;
        return hits as f64 / total as f64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let iterations = iterations.max(1);
    let hits = (0..iterations)
        .filter(|_| {
            let s: i64 = deltas
                .iter()
                .map(|&d| if rng.random::<bool>() { -d } else { d })
                .sum();
            s >= observed
        })
        .count() as u64;
    (1 + hits) as f64 / (iterations + 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub m_hat_bits: Option<f64>,
    pub mean_delta_bits: f64,
    pub bound_log2: Option<f64>,
    /// `2^{m_hat - mean_delta}`.
    pub bound_value: Option<f64>,
    pub verdict: String,
}

fn bound_summary(m_hat_bits: Option<f64>, mean_delta_bits: f64, threshold: f64) -> BoundSummary {
    let bound_log2 = m_hat_bits.map(|m| m - mean_delta_bits);
    let verdict = match bound_log2 {
        Some(b) if -b >= threshold => VERDICT_DISFAVORED,
        _ => VERDICT_INCONCLUSIVE,
    };
    BoundSummary {
        m_hat_bits,
        mean_delta_bits,
        bound_log2,
        bound_value: bound_log2.map(f64::exp2),
        verdict: verdict.into(),
    }
}

pub fn evaluate_bound(report: &ContrastReport, threshold_bits: f64) -> BoundSummary {
    bound_summary(
        report.m_hat_x64.map(x64_to_bits),
        report.mean_delta_bits(),
        threshold_bits,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynergyReport {
    pub n: usize,
    pub seed: u64,
    pub estimator: EstimatorId,
    pub joint: JointCode,
    /// `M̂(W:R)`.
    pub m_w_r_x64: i64,
    /// `M̂(W:E)`.
    pub m_w_e_x64: i64,
    /// `M̂(W:(R,E))`.
    pub m_w_re_x64: i64,
}

impl SynergyReport {
    pub fn m_w_r_bits(&self) -> f64 {
        x64_to_bits(self.m_w_r_x64)
    }

    pub fn m_w_e_bits(&self) -> f64 {
        x64_to_bits(self.m_w_e_x64)
    }

    pub fn m_w_re_bits(&self) -> f64 {
        x64_to_bits(self.m_w_re_x64)
    }
}

/// `W = R xor E` for the given `R` and `E`.
pub fn synergy_from_parts(
    r: &[u8],
    e: &[u8],
    estimator: &Estimator,
    joint: JointCode,
    seed: u64,
) -> Result<SynergyReport> {
    let w = xor_bits(r, e)?;
    let m_wr = mutual_info_tuples(&[&w], &[r], estimator, joint)?;
    let m_we = mutual_info_tuples(&[&w], &[e], estimator, joint)?;
    let m_wre = mutual_info_tuples(&[&w], &[r, e], estimator, joint)?;
    Ok(SynergyReport {
        n: w.len(),
        seed,
        estimator: estimator.id(),
        joint,
        m_w_r_x64: m_wr.m_hat_x64,
        m_w_e_x64: m_we.m_hat_x64,
        m_w_re_x64: m_wre.m_hat_x64,
    })
}

pub const MIN_SYNERGY_LENGTH: usize = 4096;

/// Independent seeded `R` and `E` of `n` bits with `W = R xor E`.
pub fn synergy_demo(
    n: usize,
    seed: u64,
    estimator: &Estimator,
    joint: JointCode,
) -> Result<SynergyReport> {
    if n < MIN_SYNERGY_LENGTH {
        return invalid(format!("synergy needs n >= {MIN_SYNERGY_LENGTH}, got {n}"));
    }
    let r = random_bits(episode_seed(seed, 1), n);
    let e = random_bits(episode_seed(seed, 2), n);
    synergy_from_parts(&r, &e, estimator, joint, seed)
}
