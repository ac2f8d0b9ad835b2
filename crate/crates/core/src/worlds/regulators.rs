//! Regulator catalog. Every regulator is materialized as a finite causal
//! transducer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::Quantizer;
use crate::error::{invalid, Result};
use crate::machine::{null_regulator, CausalTransducer, Transition};

const MAX_REGULATOR_STATES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegulatorKind {
    Null,
    Constant { symbol: u8 },
    /// Heat when the decoded error is below `-deadband`, stop above `+deadband`.
    BangBang { deadband: f64 },
    /// Heat when `-(kp e + ki I) > 0` with the integral `I` held in steps of `quant`.
    Pi { kp: f64, ki: f64, quant: f64 },
    /// A seeded pseudo-random stream unrolled into one state per step.
    Random { seed: u64 },
    /// States separated by `;`, each `next0:out0,next1:out1`; state 0 is initial.
    Tabular { table: String },
}

/// What a regulator needs to know about the readout it decodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutContext {
    /// Interface symbols per sample.
    pub frame_bits: u32,
    /// Quantizer of the error readout, if the world has one.
    pub quantizer: Option<Quantizer>,
    pub horizon: usize,
}

impl ReadoutContext {
    pub fn binary(horizon: usize) -> Self {
        ReadoutContext {
            frame_bits: 1,
            quantizer: None,
            horizon,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct FrameState<C> {
    /// `None` before the first readout symbol arrives.
    pos: Option<u32>,
    acc: u32,
    heat: u8,
    ctl: C,
}

/// Builds a regulator that collects one readout frame at a time and updates
/// its heater decision when a frame completes.
fn frame_decoder<C, F>(ctx: &ReadoutContext, ctl: C, mut decide: F) -> Result<CausalTransducer>
where
    C: Clone + Eq + std::hash::Hash,
    F: FnMut(&C, u8, u32) -> (C, u8),
{
    let b = ctx.frame_bits;
    if b == 0 || b > 16 {
        return invalid("frame width must be in [1, 16]");
    }
    let init = FrameState {
        pos: None,
        acc: 0,
        heat: 0,
        ctl,
    };
    CausalTransducer::from_fn(init, MAX_REGULATOR_STATES, |s, input| {
        let mut n = s.clone();
        match s.pos {
            // The step-0 readout symbol carries no information.
            None => n.pos = Some(0),
            Some(p) => {
                n.acc = (s.acc << 1) | u32::from(input);
                if p + 1 == b {
                    let (ctl, heat) = decide(&s.ctl, s.heat, n.acc);
                    n.ctl = ctl;
                    n.heat = heat;
                    n.acc = 0;
                    n.pos = Some(0);
                } else {
                    n.pos = Some(p + 1);
                }
            }
        }
        let out = n.heat;
        (n, out)
    })
}

fn require_quantizer(ctx: &ReadoutContext, what: &str) -> Result<Quantizer> {
    ctx.quantizer
        .ok_or_else(|| crate::error::AgarError::InvalidArgument(format!(
            "{what} needs a world with a quantized error readout"
        )))
}

pub fn bang_bang(deadband: f64, ctx: &ReadoutContext) -> Result<CausalTransducer> {
    if !(deadband >= 0.0) || !deadband.is_finite() {
        return invalid(format!("deadband must be non-negative, got {deadband}"));
    }
    let q = require_quantizer(ctx, "bangbang")?;
    frame_decoder(ctx, (), |_, heat, code| {
        let e = q.reconstruct(code);
        let h = if e < -deadband {
            1
        } else if e > deadband {
            0
        } else {
            heat
        };
        ((), h)
    })
}

pub const PI_INTEGRAL_LEVELS: i32 = 64;

pub fn pi(kp: f64, ki: f64, quant: f64, ctx: &ReadoutContext) -> Result<CausalTransducer> {
    if !kp.is_finite() || !ki.is_finite() || kp < 0.0 || ki < 0.0 {
        return invalid("PI gains must be finite and non-negative");
    }
    if !(quant > 0.0) || !quant.is_finite() {
        return invalid("PI integral quantum must be positive");
    }
    let q = require_quantizer(ctx, "pi")?;
    frame_decoder(ctx, 0i32, |&integral, _, code| {
        let e = q.reconstruct(code);
        let steps = (e / quant).round() as i32;
        let integral = (integral + steps).clamp(-PI_INTEGRAL_LEVELS, PI_INTEGRAL_LEVELS);
        let v = -(kp * e + ki * f64::from(integral) * quant);
        (integral, u8::from(v > 0.0))
    })
}

/// Emits a fixed ChaCha8 bit stream of length `horizon`, then zeros.
pub fn random(seed: u64, horizon: usize) -> Result<CausalTransducer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..horizon).map(|_| u8::from(rng.random::<bool>())).collect();
    CausalTransducer::from_sequence(&bits)
}

pub fn tabular(table: &str) -> Result<CausalTransducer> {
    let mut transitions = Vec::new();
    let rows: Vec<&str> = table.split(';').map(str::trim).filter(|r| !r.is_empty()).collect();
    if rows.is_empty() {
        return invalid("empty regulator table");
    }
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != 2 {
            return invalid(format!("table row {i} needs two entries, got `{row}`"));
        }
        for cell in cells {
            let (next, out) = cell
                .split_once(':')
                .ok_or_else(|| crate::error::AgarError::InvalidArgument(format!(
                    "table entry `{cell}` must be next:output"
                )))?;
            let next: u32 = next.trim().parse().map_err(|_| {
                crate::error::AgarError::InvalidArgument(format!("bad next state `{next}`"))
            })?;
            let output = match out.trim() {
                "0" => 0,
                "1" => 1,
                o => return invalid(format!("bad output symbol `{o}`")),
            };
            transitions.push(Transition { next, output });
        }
    }
    CausalTransducer::new(rows.len() as u32, 0, transitions, 0)
}

pub fn build_regulator(kind: &RegulatorKind, ctx: &ReadoutContext) -> Result<CausalTransducer> {
    match kind {
        RegulatorKind::Null => Ok(null_regulator()),
        RegulatorKind::Constant { symbol } => match symbol {
            0 | 1 => Ok(CausalTransducer::memoryless(*symbol, *symbol)),
            s => invalid(format!("constant symbol must be 0 or 1, got {s}")),
        },
        RegulatorKind::BangBang { deadband } => bang_bang(*deadband, ctx),
        RegulatorKind::Pi { kp, ki, quant } => pi(*kp, *ki, *quant, ctx),
        RegulatorKind::Random { seed } => random(*seed, ctx.horizon),
        RegulatorKind::Tabular { table } => tabular(table),
    }
}
