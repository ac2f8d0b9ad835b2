//! Named worlds: latch, XOR mask, LFSR mask, constant and the thermostat plant.

pub mod regulators;
pub mod thermostat;

use serde::{Deserialize, Serialize};

use crate::bits::{random_bits, xor_bits};
use crate::error::{invalid, Result};
use crate::machine::{CausalTransducer, Describe, Machine};

pub use regulators::{build_regulator, ReadoutContext, RegulatorKind};
pub use thermostat::{plant_trace, plant_trace_csv, PlantSample, ThermostatParams, ThermostatWorld};

const MAX_WORLD_STATES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatchWorldParams {
    pub watch_length: usize,
    pub fallback: Vec<u8>,
}

impl LatchWorldParams {
    pub fn horizon(&self) -> usize {
        self.fallback.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.watch_length == 0 || self.watch_length > self.fallback.len() {
            return invalid(format!(
                "latch watch length must be in [1, N], got {} with N = {}",
                self.watch_length,
                self.fallback.len()
            ));
        }
        Ok(())
    }

    /// The readout after any nonzero regulator symbol in the watch window:
    /// silent for the watch window, then `z` from step `Δ + 1` on.
    pub fn fallback_readout(&self) -> Vec<u8> {
        let d = self.watch_length;
        let mut x = vec![0u8; d];
        x.extend_from_slice(&self.fallback[d..]);
        x
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum LatchState {
    Watch { t: usize, seen: bool },
    Replay { t: usize },
    Quiet,
}

/// Watches the regulator for `Δ` symbols while emitting zeros. A nonzero
/// symbol among them switches the remaining readout to `z`.
pub fn build_latch_world(params: &LatchWorldParams) -> Result<CausalTransducer> {
    params.validate()?;
    let d = params.watch_length;
    let z = &params.fallback;
    let n = z.len();
    CausalTransducer::from_fn(LatchState::Watch { t: 1, seen: false }, MAX_WORLD_STATES, |s, input| {
        match *s {
            LatchState::Watch { t, seen } => {
                // Step 1 reads the step-0 symbol, which is 0 by convention.
                let seen = seen || (t >= 2 && input == 1);
                if t <= d {
                    (LatchState::Watch { t: t + 1, seen }, 0)
                } else if seen && t <= n {
                    (LatchState::Replay { t: t + 1 }, z[t - 1])
                } else {
                    (LatchState::Quiet, 0)
                }
            }
            LatchState::Replay { t } if t <= n => (LatchState::Replay { t: t + 1 }, z[t - 1]),
            LatchState::Replay { .. } | LatchState::Quiet => (LatchState::Quiet, 0),
        }
    })
}

/// Emits `z_t xor u_{t-1}`, then echoes its input once the mask is used up.
pub fn build_xor_world(mask: &[u8]) -> Result<CausalTransducer> {
    if mask.is_empty() {
        return invalid("xor mask must be nonempty");
    }
    let n = mask.len();
    CausalTransducer::from_fn(0usize, MAX_WORLD_STATES, |&t, input| {
        if t < n {
            (t + 1, mask[t] ^ (input & 1))
        } else {
            (t, input & 1)
        }
    })
}

/// Fibonacci LFSR output: `taps` are 1-based register positions, the
/// register starts at `init` (nonzero) and the low bit is emitted each step.
pub fn lfsr_bits(width: u32, taps: &[u32], init: u32, n: usize) -> Result<Vec<u8>> {
    if !(2..=31).contains(&width) {
        return invalid("lfsr width must be in [2, 31]");
    }
    let mask = (1u32 << width) - 1;
    if init & mask == 0 {
        return invalid("lfsr initial state must be nonzero");
    }
    if taps.is_empty() || taps.iter().any(|&t| t == 0 || t > width) {
        return invalid("lfsr taps must be in [1, width]");
    }
    let mut reg = init & mask;
    Ok((0..n)
        .map(|_| {
            let out = (reg & 1) as u8;
            let fb = taps.iter().fold(0u32, |a, &t| a ^ ((reg >> (width - t)) & 1));
            reg = (reg >> 1) | (fb << (width - 1));
            out
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorldSpec {
    Thermostat(ThermostatParams),
    /// `z` is drawn from `z_seed` mixed with the episode seed.
    Latch { watch_length: usize, z_seed: u64 },
    Xor { z_seed: u64 },
    Lfsr { width: u32, taps: Vec<u32>, init: u32 },
    Constant { symbol: u8 },
}

/// Seed for episode-level exogenous variation.
pub fn episode_seed(base: u64, episode: u64) -> u64 {
    base ^ episode.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone)]
pub enum AnyWorld {
    Transducer(CausalTransducer),
    Thermostat(ThermostatWorld),
}

#[derive(Debug, Clone)]
pub enum AnyWorldState {
    Transducer(u32),
    Thermostat(thermostat::ThermostatState),
}

impl Machine for AnyWorld {
    type State = AnyWorldState;

    fn initial_state(&self) -> AnyWorldState {
        match self {
            AnyWorld::Transducer(m) => AnyWorldState::Transducer(m.initial_state()),
            AnyWorld::Thermostat(w) => AnyWorldState::Thermostat(w.initial_state()),
        }
    }

    fn step(&self, state: &mut AnyWorldState, input: u8) -> u8 {
        match (self, state) {
            (AnyWorld::Transducer(m), AnyWorldState::Transducer(s)) => m.step(s, input),
            (AnyWorld::Thermostat(w), AnyWorldState::Thermostat(s)) => w.step(s, input),
            _ => unreachable!("state from a different world"),
        }
    }
}

impl Describe for AnyWorld {
    fn description(&self) -> Vec<u8> {
        match self {
            AnyWorld::Transducer(m) => m.serialize(),
            AnyWorld::Thermostat(w) => w.description(),
        }
    }
}

impl AnyWorld {
    pub fn readout_context(&self, horizon: usize) -> ReadoutContext {
        match self {
            AnyWorld::Transducer(_) => ReadoutContext::binary(horizon),
            AnyWorld::Thermostat(w) => ReadoutContext {
                frame_bits: w.params().readout_bits,
                quantizer: Some(w.quantizer()),
                horizon,
            },
        }
    }
}

impl WorldSpec {
    pub fn name(&self) -> &'static str {
        match self {
            WorldSpec::Thermostat(_) => "thermostat",
            WorldSpec::Latch { .. } => "latch",
            WorldSpec::Xor { .. } => "xor",
            WorldSpec::Lfsr { .. } => "lfsr",
            WorldSpec::Constant { .. } => "constant",
        }
    }

    /// Builds the world instance for one episode.
    pub fn build(&self, seed: u64, horizon: usize) -> Result<AnyWorld> {
        if horizon == 0 {
            return invalid("horizon must be at least 1");
        }
        Ok(match self {
            WorldSpec::Thermostat(p) => {
                let p = ThermostatParams {
                    seed: episode_seed(p.seed, seed),
                    ..p.clone()
                };
                AnyWorld::Thermostat(ThermostatWorld::new(p)?)
            }
            WorldSpec::Latch { watch_length, z_seed } => {
                let params = LatchWorldParams {
                    watch_length: *watch_length,
                    fallback: random_bits(episode_seed(*z_seed, seed), horizon),
                };
                AnyWorld::Transducer(build_latch_world(&params)?)
            }
            WorldSpec::Xor { z_seed } => AnyWorld::Transducer(build_xor_world(&random_bits(
                episode_seed(*z_seed, seed),
                horizon,
            ))?),
            WorldSpec::Lfsr { width, taps, init } => {
                AnyWorld::Transducer(build_xor_world(&lfsr_bits(*width, taps, *init, horizon)?)?)
            }
            WorldSpec::Constant { symbol } => match symbol {
                0 | 1 => AnyWorld::Transducer(CausalTransducer::memoryless(*symbol, *symbol)),
                s => return invalid(format!("constant symbol must be 0 or 1, got {s}")),
            },
        })
    }
}

/// `x xor u` with the one-step delay the XOR world applies.
pub fn delayed_xor(z: &[u8], u: &[u8]) -> Result<Vec<u8>> {
    let mut shifted = vec![0u8; u.len()];
    if !u.is_empty() {
        shifted[1..].copy_from_slice(&u[..u.len() - 1]);
    }
    xor_bits(z, &shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{null_regulator, run_coupled, run_open_loop};
    use proptest::prelude::*;

    fn emit_one_at(t: usize, n: usize) -> CausalTransducer {
        CausalTransducer::from_fn(1usize, n + 2, move |&s, _| {
            ((s + 1).min(n + 1), u8::from(s == t))
        })
        .unwrap()
    }

    #[test]
    fn latch_null_gives_zeros() {
        let z = random_bits(3, 16);
        let w = build_latch_world(&LatchWorldParams { watch_length: 3, fallback: z.clone() }).unwrap();
        assert_eq!(run_coupled(&w, &null_regulator(), 16).unwrap().world_readout, vec![0; 16]);
        assert!(w.description_bits() >= 16);
    }

    #[test]
    fn latch_early_one_replays_z() {
        let z = random_bits(3, 16);
        let p = LatchWorldParams { watch_length: 3, fallback: z.clone() };
        let w = build_latch_world(&p).unwrap();
        // The regulator emits 1 at t = 2; the world reads it at t = 3 and
        // switches at t = 4, so x = 000 followed by z_4..z_16.
        let r = emit_one_at(2, 16);
        let x = run_coupled(&w, &r, 16).unwrap().world_readout;
        assert_eq!(x, p.fallback_readout());
        assert_eq!(&x[3..], &z[3..]);
        // A 1 after the watch window changes nothing.
        let late = emit_one_at(4, 16);
        assert_eq!(run_coupled(&w, &late, 16).unwrap().world_readout, vec![0; 16]);
    }

    #[test]
    fn latch_full_watch_is_always_zero() {
        let z = random_bits(4, 12);
        let w = build_latch_world(&LatchWorldParams { watch_length: 12, fallback: z }).unwrap();
        for t in 1..=12 {
            assert_eq!(run_coupled(&w, &emit_one_at(t, 12), 12).unwrap().world_readout, vec![0; 12]);
        }
        assert!(build_latch_world(&LatchWorldParams { watch_length: 0, fallback: vec![0; 4] }).is_err());
        assert!(build_latch_world(&LatchWorldParams { watch_length: 5, fallback: vec![0; 4] }).is_err());
    }

    #[test]
    fn xor_world_examples() {
        let z = random_bits(9, 8);
        let w = build_xor_world(&z).unwrap();
        assert_eq!(run_coupled(&w, &null_regulator(), 8).unwrap().world_readout, z);
        // Regulator replays z one step ahead so the delayed xor cancels it.
        let ahead: Vec<u8> = z[1..].to_vec();
        let r = CausalTransducer::from_sequence(&ahead).unwrap();
        let x = run_coupled(&w, &r, 8).unwrap().world_readout;
        assert_eq!(&x[1..], &[0; 7]);
        assert_eq!(x[0], z[0]);
    }

    #[test]
    fn xor_world_involution_all_streams() {
        let z = random_bits(10, 8);
        let w = build_xor_world(&z).unwrap();
        for v in 0u32..256 {
            let u: Vec<u8> = (0..8).map(|i| ((v >> i) & 1) as u8).collect();
            let x = run_open_loop(&w, &u);
            let back = run_open_loop(&build_xor_world(&x).unwrap(), &u);
            assert_eq!(back, z);
        }
    }

    #[test]
    fn lfsr_period() {
        // x^4 + x^3 + 1 has period 15.
        let s = lfsr_bits(4, &[4, 3], 1, 45).unwrap();
        assert_eq!(&s[..15], &s[15..30]);
        assert!((1..15).all(|p| s[..15] != s[p..p + 15]));
        assert!(lfsr_bits(4, &[4, 3], 0, 5).is_err());
        assert!(lfsr_bits(4, &[5], 1, 5).is_err());
    }

    #[test]
    fn specs_build_and_round_trip() {
        let specs = [
            WorldSpec::Thermostat(ThermostatParams::default()),
            WorldSpec::Latch { watch_length: 4, z_seed: 1 },
            WorldSpec::Xor { z_seed: 2 },
            WorldSpec::Lfsr { width: 4, taps: vec![4, 3], init: 1 },
            WorldSpec::Constant { symbol: 1 },
        ];
        for s in specs {
            let w = s.build(5, 64).unwrap();
            if let AnyWorld::Transducer(m) = &w {
                let back = CausalTransducer::deserialize(&m.serialize()).unwrap();
                let a = run_coupled(m, &null_regulator(), 64).unwrap();
                let b = run_coupled(&back, &null_regulator(), 64).unwrap();
                assert_eq!(a, b);
            }
            assert!(!w.description().is_empty());
        }
        assert!(WorldSpec::Constant { symbol: 3 }.build(0, 4).is_err());
    }

    proptest! {
        #[test]
        fn latch_has_two_outcomes(seed in 0u64..1000, d in 1usize..12, regs in proptest::collection::vec(0u8..2, 12)) {
            let p = LatchWorldParams { watch_length: d, fallback: random_bits(seed, 12) };
            let w = build_latch_world(&p).unwrap();
            let x = run_open_loop(&w, &regs);
            prop_assert!(x == vec![0; 12] || x == p.fallback_readout());
        }

        #[test]
        fn delayed_xor_matches_world(seed in 0u64..1000, u in proptest::collection::vec(0u8..2, 16)) {
            let z = random_bits(seed, 16);
            let w = build_xor_world(&z).unwrap();
            let r = CausalTransducer::from_sequence(&u).unwrap();
            let x = run_coupled(&w, &r, 16).unwrap().world_readout;
            prop_assert_eq!(x, delayed_xor(&z, &u).unwrap());
        }
    }
}
