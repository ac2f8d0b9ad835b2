//! One pipeline per command. Each returns its artifacts without touching disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use agar_core::bits::{format_bits, parse_bits, random_bits};
use agar_core::codec::Estimator;
use agar_core::contrast::{evaluate_bound, run_contrast, synergy_demo};
use agar_core::ctm::{CtmTable, MAX_BLOCK_LENGTH, MAX_TABLE_PROGRAM_BITS};
use agar_core::machine::{null_regulator, run_coupled};
use agar_core::micro::checks::{
    chance_simplification, coding_constants, counting_check, fit_multiplicity_offset,
    multiplicity_check, posterior_normalization, ratio_f64, ratio_string, sandwich_violations,
    tail_profile,
};
use agar_core::micro::gar::gar_bound_check;
use agar_core::micro::{enumerate, opcode_set_hash, EnumerationIndex};
use agar_core::worlds::{build_regulator, plant_trace, plant_trace_csv, AnyWorld};
use agar_core::{AgarError, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifacts::{write_atomic, Artifact, Stamp};
use crate::config::{Command, ExperimentConfig};

/// Pair budget for the exhaustive family check.
const MAX_GAR_PAIRS: usize = 1 << 20;
/// Largest allowed difference between multiplicity offsets fitted at two L values.
const MAX_FIT_SPREAD_BITS: f64 = 1.0;

pub enum Outcome {
    Done(Vec<Artifact>),
    /// A verification check failed; carries the names of the failing checks.
    VerifyFailed(Vec<String>),
}

/// Reuses enumeration indices and block tables across runs when `AGAR_CACHE` is set.
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env() -> Self {
        Cache {
            dir: std::env::var_os("AGAR_CACHE")
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
        }
    }

    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    fn path(&self, name: String) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn store(path: &Path, bytes: &[u8]) {
        if let Err(e) = write_atomic(path, bytes) {
            eprintln!("warning: could not write cache {}: {e}", path.display());
        }
    }

    pub fn index(&self, max_len: u32, steps: u64) -> Result<EnumerationIndex> {
        let name = format!("index-L{max_len}-S{steps}-{}.bin", hex::encode(opcode_set_hash()));
        let path = self.path(name);
        if let Some(p) = &path {
            if let Ok(bytes) = std::fs::read(p) {
                match EnumerationIndex::read_binary(bytes.as_slice()) {
                    Ok(ix) if ix.max_len() == max_len && ix.step_budget() == steps => return Ok(ix),
                    _ => eprintln!("warning: ignoring unreadable cache {}", p.display()),
                }
            }
        }
        let ix = enumerate(max_len, steps)?;
        if let Some(p) = &path {
            Self::store(p, &ix.to_binary());
        }
        Ok(ix)
    }

    pub fn table(&self, block_length: usize, max_len: u32, steps: u64) -> Result<CtmTable> {
        if max_len > MAX_TABLE_PROGRAM_BITS {
            return Err(AgarError::Capacity(format!(
                "table builds are limited to programs of {MAX_TABLE_PROGRAM_BITS} bits"
            )));
        }
        if block_length == 0 || block_length > MAX_BLOCK_LENGTH {
            return Err(AgarError::InvalidArgument(format!(
                "block length must be in 1..={MAX_BLOCK_LENGTH}"
            )));
        }
        let path = self.path(format!(
            "ctm-b{block_length}-L{max_len}-S{steps}-{}.bin",
            hex::encode(opcode_set_hash())
        ));
        if let Some(p) = &path {
            if let Ok(bytes) = std::fs::read(p) {
                match CtmTable::read_binary(bytes.as_slice()) {
                    Ok(t) if t.block_length() == block_length
                        && t.max_program_bits() == max_len
                        && t.step_budget() == steps =>
                    {
                        return Ok(t)
                    }
                    _ => eprintln!("warning: ignoring unreadable cache {}", p.display()),
                }
            }
        }
        let t = CtmTable::from_index(&self.index(max_len, steps)?, block_length)?;
        if let Some(p) = &path {
            Self::store(p, &t.to_binary());
        }
        Ok(t)
    }
}

fn estimator(cfg: &ExperimentConfig, cache: &Cache) -> Result<Estimator> {
    cfg.estimator.build(|b, l, s| cache.table(b, l, s))
}

pub fn dispatch(cfg: &ExperimentConfig, cache: &Cache) -> Result<Outcome> {
    let stamp = Stamp {
        fingerprint: &cfg.fingerprint,
    };
    match cfg.command {
        Command::Simulate => simulate(cfg, &stamp).map(Outcome::Done),
        Command::Estimate => estimate(cfg, cache, &stamp).map(Outcome::Done),
        Command::Contrast => contrast(cfg, cache, &stamp).map(Outcome::Done),
        Command::Enumerate => enumerate_cmd(cfg, cache, &stamp).map(Outcome::Done),
        Command::Ctm => ctm(cfg, cache, &stamp).map(Outcome::Done),
        Command::Synergy => synergy(cfg, cache, &stamp).map(Outcome::Done),
        Command::Verify => verify(cfg, cache, &stamp),
    }
}

fn simulate(cfg: &ExperimentConfig, stamp: &Stamp<'_>) -> Result<Vec<Artifact>> {
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let runs: Vec<(u64, Vec<Artifact>, Value)> = seeds
        .par_iter()
        .map(|&seed| {
            let world = cfg.world.build(seed, cfg.horizon)?;
            let reg = build_regulator(&cfg.regulator, &world.readout_context(cfg.horizon))?;
            let on = run_coupled(&world, &reg, cfg.horizon)?;
            let off = run_coupled(&world, &null_regulator(), cfg.horizon)?;
            let mut files = vec![
                stamp.csv(&format!("transcript_on_{seed}.csv"), &on.to_csv()),
                stamp.csv(&format!("transcript_off_{seed}.csv"), &off.to_csv()),
            ];
            if let AnyWorld::Thermostat(w) = &world {
                let trace = plant_trace(w, &reg, cfg.horizon)?;
                files.push(stamp.csv(&format!("plant_on_{seed}.csv"), &plant_trace_csv(&trace)));
                let trace = plant_trace(w, &null_regulator(), cfg.horizon)?;
                files.push(stamp.csv(&format!("plant_off_{seed}.csv"), &plant_trace_csv(&trace)));
            }
            let ones = |v: &[u8]| v.iter().filter(|&&b| b == 1).count();
            let summary = json!({
                "seed": seed,
                "on_readout_ones": ones(&on.world_readout),
                "on_regulator_ones": ones(&on.regulator_output),
                "off_readout_ones": ones(&off.world_readout),
            });
            Ok((seed, files, summary))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut summaries = Vec::new();
    for (_, files, s) in runs {
        out.extend(files);
        summaries.push(s);
    }
    out.push(stamp.json(
        "simulate.json",
        json!({
            "world": cfg.world.name(),
            "regulator": cfg.regulator,
            "N": cfg.horizon,
            "episodes": summaries,
        }),
    ));
    Ok(out)
}

/// Reads a bitstring written as `0`/`1` characters; whitespace is ignored.
pub fn read_bit_file(path: &Path) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AgarError::Io(format!("{}: {e}", path.display())))?;
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    parse_bits(&compact)
}

fn estimate(cfg: &ExperimentConfig, cache: &Cache, stamp: &Stamp<'_>) -> Result<Vec<Artifact>> {
    let Some(input) = &cfg.estimate_input else {
        return Err(AgarError::InvalidArgument(
            "estimate needs an input file (--input or estimate.input)".into(),
        ));
    };
    let x = read_bit_file(input)?;
    let est = estimator(cfg, cache)?;
    let report = est.codelength(&x)?;
    Ok(vec![stamp.json(
        "estimate.json",
        json!({
            "input_sha256": hex::encode(<sha2::Sha256 as sha2::Digest>::digest(format_bits(&x).as_bytes())),
            "report": report,
            "bits": report.bits(),
            "rate": report.rate(),
        }),
    )])
}

fn contrast(cfg: &ExperimentConfig, cache: &Cache, stamp: &Stamp<'_>) -> Result<Vec<Artifact>> {
    let est = estimator(cfg, cache)?;
    let report = run_contrast(&cfg.contrast_config(est))?;
    let bound = evaluate_bound(&report, cfg.verdict_threshold);
    let mut body = serde_json::to_value(&report).expect("report serializes");
    body["mean_delta_bits"] = json!(report.mean_delta_bits());
    body["bound"] = serde_json::to_value(&bound).expect("bound serializes");
    Ok(vec![
        stamp.json("contrast.json", body),
        stamp.csv("episodes.csv", &report.episodes_csv()),
    ])
}

fn enumerate_cmd(cfg: &ExperimentConfig, cache: &Cache, stamp: &Stamp<'_>) -> Result<Vec<Artifact>> {
    let ix = cache.index(cfg.enumerate_max_len, cfg.enumerate_steps)?;
    let kraft = ix.kraft_sum();
    Ok(vec![
        stamp.binary("index.bin", ix.to_binary()),
        stamp.csv("index.csv", &ix.to_csv()),
        stamp.json(
            "enumerate.json",
            json!({
                "max_len": ix.max_len(),
                "step_budget": ix.step_budget(),
                "opcode_set": hex::encode(opcode_set_hash()),
                "outputs": ix.len(),
                "halting_programs": ix.total_programs(),
                "kraft_sum": ratio_string(&kraft),
                "kraft_sum_f64": ratio_f64(&kraft),
            }),
        ),
    ])
}

fn ctm(cfg: &ExperimentConfig, cache: &Cache, stamp: &Stamp<'_>) -> Result<Vec<Artifact>> {
    let (b, l, s) = match &cfg.estimator {
        crate::config::EstimatorSpec::Bdm {
            block_length,
            max_program_bits,
            step_budget,
        } => (*block_length, *max_program_bits, *step_budget),
        _ => {
            return Err(AgarError::InvalidArgument(
                "ctm needs estimator = bdm for its block parameters".into(),
            ))
        }
    };
    let t = cache.table(b, l, s)?;
    Ok(vec![
        stamp.binary("ctm.bin", t.to_binary()),
        stamp.csv("ctm.csv", &t.to_csv()),
        stamp.json(
            "ctm.json",
            json!({
                "block_length": t.block_length(),
                "max_program_bits": t.max_program_bits(),
                "step_budget": t.step_budget(),
                "entries": t.len(),
                "coverage": t.coverage(),
                "fallback_bits": t.fallback_bits(),
                "normalization_sum": t.normalization_sum(),
            }),
        ),
    ])
}

fn synergy(cfg: &ExperimentConfig, cache: &Cache, stamp: &Stamp<'_>) -> Result<Vec<Artifact>> {
    let est = estimator(cfg, cache)?;
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let rows = seeds
        .par_iter()
        .map(|&s| synergy_demo(cfg.synergy_n, s, &est, cfg.synergy_joint))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("seed,m_w_r_x64,m_w_e_x64,m_w_re_x64\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.seed, r.m_w_r_x64, r.m_w_e_x64, r.m_w_re_x64));
    }
    let n = cfg.synergy_n as f64;
    let max_wr = rows.iter().map(|r| r.m_w_r_bits()).fold(f64::NEG_INFINITY, f64::max);
    let min_wre = rows.iter().map(|r| r.m_w_re_bits()).fold(f64::INFINITY, f64::min);
    Ok(vec![
        stamp.json(
            "synergy.json",
            json!({
                "n": cfg.synergy_n,
                "estimator": est.id(),
                "estimator_params": est.params(),
                "joint": cfg.synergy_joint,
                "rows": rows,
                "max_m_w_r_fraction": max_wr / n,
                "min_m_w_re_fraction": min_wre / n,
            }),
        ),
        stamp.csv("synergy.csv", &csv),
    ])
}

struct Check {
    name: String,
    pass: bool,
    details: Value,
}

/// Checks on one index; `c` is the log-slope used for the multiplicity fit.
fn index_checks(ix: &EnumerationIndex, cfg: &ExperimentConfig, checks: &mut Vec<Check>) -> Result<()> {
    let v = &cfg.verify;
    let l = ix.max_len();
    let kraft = ix.kraft_sum();
    checks.push(Check {
        name: format!("kraft@L{l}"),
        pass: kraft <= agar_core::micro::Dyadic::from_integer(1),
        details: json!({"sum": ratio_string(&kraft), "sum_f64": ratio_f64(&kraft)}),
    });
    let norm = posterior_normalization(ix)?;
    checks.push(Check {
        name: format!("posterior_normalization@L{l}"),
        pass: norm.failures.is_empty(),
        details: serde_json::to_value(&norm).expect("serializes"),
    });
    let cc = coding_constants(ix)?;
    let sandwich = sandwich_violations(ix, &cc);
    checks.push(Check {
        name: format!("coding_sandwich@L{l}"),
        pass: sandwich.is_empty() && cc.c1 >= agar_core::micro::Dyadic::from_integer(1),
        details: json!({
            "c1": ratio_string(&cc.c1),
            "c2": ratio_string(&cc.c2),
            "c1_f64": ratio_f64(&cc.c1),
            "c2_f64": ratio_f64(&cc.c2),
            "violations": sandwich.len(),
        }),
    });
    let mut tail_bad = Vec::new();
    let mut worst = 0.0f64;
    for rec in ix.records() {
        let tp = tail_profile(&rec.output, ix, &cc)?;
        for (t, b) in tp.tails.iter().zip(&tp.bounds) {
            worst = worst.max(ratio_f64(t) / ratio_f64(b));
        }
        if !tp.violations().is_empty() {
            tail_bad.push(format_bits(&rec.output));
        }
    }
    checks.push(Check {
        name: format!("tail_decay@L{l}"),
        pass: tail_bad.is_empty(),
        details: json!({
            "outputs": ix.len(),
            "violations": tail_bad.len(),
            "first_violations": tail_bad.iter().take(10).collect::<Vec<_>>(),
            "max_tail_to_bound": worst,
        }),
    });
    let counting: Vec<_> = (0..=l).map(|k| counting_check(ix, v.counting_n, k)).collect();
    checks.push(Check {
        name: format!("counting@L{l}"),
        pass: counting.iter().all(|c| c.holds()),
        details: json!({"n": v.counting_n, "rows": counting}),
    });
    let mut mult = Vec::new();
    for r in 1..64 {
        let m = multiplicity_check(ix, r, v.multiplicity_c, v.multiplicity_c_prime)?;
        if m.qualifying == 0 {
            break;
        }
        mult.push(m);
    }
    let fit = fit_multiplicity_offset(ix, v.multiplicity_c);
    checks.push(Check {
        name: format!("multiplicity@L{l}"),
        pass: mult.iter().all(|m| m.violations == 0 && m.weight_violations == 0),
        details: json!({
            "c": v.multiplicity_c,
            "c_prime": v.multiplicity_c_prime,
            "fitted_c_prime": fit,
            "rows": mult,
        }),
    });
    Ok(())
}

fn verify(cfg: &ExperimentConfig, cache: &Cache, stamp: &Stamp<'_>) -> Result<Outcome> {
    let v = &cfg.verify;
    let mut checks = Vec::new();
    let ix = cache.index(v.max_len, v.steps)?;
    index_checks(&ix, cfg, &mut checks)?;

    let z = random_bits(v.chance_z_seed, v.chance_n);
    let rows = chance_simplification(&ix, &z)?;
    checks.push(Check {
        name: format!("chance@L{}", ix.max_len()),
        pass: rows.iter().all(|r| r.holds()),
        details: json!({
            "z": format_bits(&z),
            "rows": rows.iter().map(|r| json!({
                "delta": r.delta,
                "fraction": ratio_string(&r.fraction),
                "bound": ratio_string(&r.bound),
                "holds": r.holds(),
            })).collect::<Vec<_>>(),
        }),
    });

    let mut fits = BTreeMap::new();
    fits.insert(ix.max_len(), fit_multiplicity_offset(&ix, v.multiplicity_c));
    let mut indices: BTreeMap<u32, EnumerationIndex> = BTreeMap::new();
    indices.insert(ix.max_len(), ix);
    if v.second_max_len != v.max_len {
        let ix2 = cache.index(v.second_max_len, v.steps)?;
        let mut second = Vec::new();
        index_checks(&ix2, cfg, &mut second)?;
        checks.extend(second.into_iter().filter(|c| c.name.starts_with("multiplicity")));
        fits.insert(ix2.max_len(), fit_multiplicity_offset(&ix2, v.multiplicity_c));
        indices.insert(ix2.max_len(), ix2);
    }
    let fitted: Vec<f64> = fits.values().flatten().copied().collect();
    let spread = fitted.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - fitted.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if fitted.len() < 2 { 0.0 } else { spread };
    checks.push(Check {
        name: "multiplicity_fit_stability".into(),
        pass: fitted.iter().all(|&c| c <= v.multiplicity_c_prime) && spread <= MAX_FIT_SPREAD_BITS,
        details: json!({
            "c": v.multiplicity_c,
            "fitted_c_prime_by_L": fits,
            "spread_bits": spread,
            "max_spread_bits": MAX_FIT_SPREAD_BITS,
        }),
    });

    let gar_ix = match indices.remove(&v.gar_index_len) {
        Some(ix) => ix,
        None => cache.index(v.gar_index_len, v.steps)?,
    };
    let gar = gar_bound_check(v.gar_code_bits, v.gar_horizon, &gar_ix, MAX_GAR_PAIRS)?;
    checks.push(Check {
        name: "gar_bound".into(),
        pass: gar.violations == 0 && gar.tail_violations == 0,
        details: serde_json::to_value(&gar).expect("serializes"),
    });

    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    if !failed.is_empty() {
        return Ok(Outcome::VerifyFailed(failed));
    }
    let mut csv = String::from("check,pass\n");
    for c in &checks {
        csv.push_str(&format!("{},{}\n", c.name, c.pass));
    }
    let body = json!({
        "max_len": v.max_len,
        "step_budget": v.steps,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "pass": c.pass,
            "details": c.details,
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome::Done(vec![stamp.json("verify.json", body), stamp.csv("verify.csv", &csv)]))
}
