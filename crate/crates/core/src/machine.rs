//! Deterministic causal machines and the closed-loop world/regulator coupling.
//!
//! Coupling discipline: at step `t` (1-based) each machine reads the symbol
//! the other machine emitted at step `t - 1` and emits one symbol. The
//! symbols exchanged "at step 0" are 0 on both interfaces.

use std::collections::HashMap;
use std::hash::Hash;

use crate::bits::{ceil_log2, elias_gamma_len, BitReader, BitWriter};
use crate::error::{invalid, AgarError, Result};

/// Anything that can sit on one side of the coupled loop.
pub trait Machine {
    type State: Clone;

    fn initial_state(&self) -> Self::State;

    /// Consume one interface symbol and emit one.
    fn step(&self, state: &mut Self::State, input: u8) -> u8;
}

/// A canonical bit description of a machine, used as the computable stand-in
/// for its program (|W|, |R|).
pub trait Describe {
    fn description(&self) -> Vec<u8>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub next: u32,
    pub output: u8,
}

/// Finite-state transducer over the binary interface alphabet.
///
/// `scratch_capacity` is carried and serialized as declared metadata; the
/// contents of scratch cells are folded into the state space by the
/// builders, so the transition table alone determines behavior.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CausalTransducer {
    state_count: u32,
    initial_state: u32,
    transitions: Vec<Transition>,
    scratch_capacity: u32,
}

impl CausalTransducer {
    /// `transitions[2 * state + input]` gives the move for `(state, input)`.
    pub fn new(
        state_count: u32,
        initial_state: u32,
        transitions: Vec<Transition>,
        scratch_capacity: u32,
    ) -> Result<Self> {
        if state_count == 0 {
            return invalid("a machine needs at least one state");
        }
        if initial_state >= state_count {
            return invalid(format!(
                "initial state {initial_state} out of range for {state_count} states"
            ));
        }
        if transitions.len() != 2 * state_count as usize {
            return invalid(format!(
                "transition table has {} entries, expected {}",
                transitions.len(),
                2 * state_count
            ));
        }
        if let Some(t) = transitions
            .iter()
            .find(|t| t.next >= state_count || t.output > 1)
        {
            return invalid(format!("invalid transition {t:?}"));
        }
        Ok(Self {
            state_count,
            initial_state,
            transitions,
            scratch_capacity,
        })
    }

    /// Single-state machine emitting `output(input)`.
    pub fn memoryless(on_zero: u8, on_one: u8) -> Self {
        Self::new(
            1,
            0,
            vec![
                Transition { next: 0, output: on_zero & 1 },
                Transition { next: 0, output: on_one & 1 },
            ],
            0,
        )
        .expect("memoryless machine is valid")
    }

    /// Materializes the reachable part of an abstract machine by breadth-first
    /// exploration from `initial`. State ids follow discovery order, so the
    /// initial state is 0.
    pub fn from_fn<S, F>(initial: S, max_states: usize, mut step: F) -> Result<Self>
    where
        S: Clone + Eq + Hash,
        F: FnMut(&S, u8) -> (S, u8),
    {
        let mut ids: HashMap<S, u32> = HashMap::new();
        let mut order = vec![initial.clone()];
        ids.insert(initial, 0);
        let mut transitions = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let s = order[i].clone();
            for input in 0..2u8 {
                let (next, output) = step(&s, input);
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        if order.len() >= max_states {
                            return Err(AgarError::Capacity(format!(
                                "machine exceeds {max_states} states"
                            )));
                        }
                        let id = order.len() as u32;
                        ids.insert(next.clone(), id);
                        order.push(next);
                        id
                    }
                };
                transitions.push(Transition { next: id, output: output & 1 });
            }
            i += 1;
        }
        Self::new(order.len() as u32, 0, transitions, 0)
    }

    /// Emits `bits` in order regardless of input, then zeros forever.
    pub fn from_sequence(bits: &[u8]) -> Result<Self> {
        let n = bits.len();
        Self::from_fn(0usize, n + 1, |&t, _| {
            if t < n {
                (t + 1, bits[t] & 1)
            } else {
                (n, 0)
            }
        })
    }

    pub fn with_scratch_capacity(mut self, cells: u32) -> Self {
        self.scratch_capacity = cells;
        self
    }

    pub fn state_count(&self) -> u32 {
        self.state_count
    }

    pub fn initial(&self) -> u32 {
        self.initial_state
    }

    pub fn scratch_capacity(&self) -> u32 {
        self.scratch_capacity
    }

    pub fn transition(&self, state: u32, input: u8) -> Transition {
        self.transitions[2 * state as usize + (input & 1) as usize]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Exact length of [`serialize`](Self::serialize)'s output.
    pub fn description_bits(&self) -> u64 {
        let s = u64::from(self.state_count);
        elias_gamma_len(s)
            + elias_gamma_len(u64::from(self.scratch_capacity) + 1)
            + 2 * s * (u64::from(ceil_log2(s)) + 1)
            + 2
    }

    /// Canonical code: gamma(states), gamma(scratch + 1), row-major
    /// `(next-state, output)` entries, trailer `11`. The format has no field
    /// for the initial state, so ids 0 and `initial` are swapped on the way out.
    pub fn serialize(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        self.write_to(&mut w);
        w.into_bits()
    }

    pub fn write_to(&self, w: &mut BitWriter) {
        let init = self.initial_state;
        let relabel = |s: u32| {
            if s == init {
                0
            } else if s == 0 {
                init
            } else {
                s
            }
        };
        let width = ceil_log2(u64::from(self.state_count));
        w.write_gamma(u64::from(self.state_count));
        w.write_gamma(u64::from(self.scratch_capacity) + 1);
        for state in 0..self.state_count {
            let original = relabel(state);
            for input in 0..2u8 {
                let t = self.transition(original, input);
                w.write_uint(u64::from(relabel(t.next)), width);
                w.push(t.output);
            }
        }
        w.push(1);
        w.push(1);
    }

    /// Inverse of [`serialize`](Self::serialize); the whole input must be consumed.
    pub fn deserialize(bits: &[u8]) -> Result<Self> {
        let mut r = BitReader::new(bits);
        let m = Self::read_from(&mut r)?;
        if r.remaining() != 0 {
            return Err(AgarError::Decode(format!(
                "{} trailing bits after machine code",
                r.remaining()
            )));
        }
        Ok(m)
    }

    pub fn read_from(r: &mut BitReader<'_>) -> Result<Self> {
        let states = r.read_gamma()?;
        if states > u64::from(u32::MAX / 2) {
            return Err(AgarError::Decode(format!("state count {states} too large")));
        }
        let scratch = r.read_gamma()? - 1;
        let width = ceil_log2(states);
        let mut transitions = Vec::with_capacity(2 * states as usize);
        for _ in 0..2 * states {
            let next = r.read_uint(width)?;
            let output = r.read_bit()?;
            if next >= states {
                return Err(AgarError::Decode(format!("next state {next} out of range")));
            }
            transitions.push(Transition { next: next as u32, output });
        }
        if r.read_bit()? != 1 || r.read_bit()? != 1 {
            return Err(AgarError::Decode("missing 11 end marker".into()));
        }
        let scratch = u32::try_from(scratch)
            .map_err(|_| AgarError::Decode("scratch capacity too large".into()))?;
        Self::new(states as u32, 0, transitions, scratch)
            .map_err(|e| AgarError::Decode(e.to_string()))
    }
}

impl Machine for CausalTransducer {
    type State = u32;

    fn initial_state(&self) -> u32 {
        self.initial_state
    }

    fn step(&self, state: &mut u32, input: u8) -> u8 {
        let t = self.transition(*state, input);
        *state = t.next;
        t.output
    }
}

impl Describe for CausalTransducer {
    fn description(&self) -> Vec<u8> {
        self.serialize()
    }
}

/// The off/baseline regulator: one state, emits 0 whatever it reads.
pub fn null_regulator() -> CausalTransducer {
    CausalTransducer::memoryless(0, 0)
}

/// The realized interface record of one coupled run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transcript {
    pub horizon: usize,
    pub world_readout: Vec<u8>,
    pub regulator_output: Vec<u8>,
}

impl Transcript {
    /// `t,x_t,u_t` rows, `t` starting at 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x_t,u_t\n");
        for (i, (x, u)) in self
            .world_readout
            .iter()
            .zip(&self.regulator_output)
            .enumerate()
        {
            s.push_str(&format!("{},{},{}\n", i + 1, x, u));
        }
        s
    }
}

/// Runs `world` and `regulator` in lock step for `horizon` steps.
pub fn run_coupled<W, R>(world: &W, regulator: &R, horizon: usize) -> Result<Transcript>
where
    W: Machine + ?Sized,
    R: Machine + ?Sized,
{
    run_coupled_observed(world, regulator, horizon, |_, _, _, _| {})
}

/// Like [`run_coupled`], calling `observe(t, world_state, x_t, u_t)` after every step.
pub fn run_coupled_observed<W, R, F>(
    world: &W,
    regulator: &R,
    horizon: usize,
    mut observe: F,
) -> Result<Transcript>
where
    W: Machine + ?Sized,
    R: Machine + ?Sized,
    F: FnMut(usize, &W::State, u8, u8),
{
    if horizon == 0 {
        return invalid("horizon must be at least 1");
    }
    let mut ws = world.initial_state();
    let mut rs = regulator.initial_state();
    let (mut last_x, mut last_u) = (0u8, 0u8);
    let mut x = Vec::with_capacity(horizon);
    let mut u = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let xt = world.step(&mut ws, last_u) & 1;
        let ut = regulator.step(&mut rs, last_x) & 1;
        observe(t, &ws, xt, ut);
        x.push(xt);
        u.push(ut);
        last_x = xt;
        last_u = ut;
    }
    Ok(Transcript {
        horizon,
        world_readout: x,
        regulator_output: u,
    })
}

/// Feeds `inputs[t]` to the machine at step `t + 1` (so `inputs[0]` plays the
/// role of the step-0 symbol) and returns the emitted symbols.
pub fn run_open_loop<M: Machine + ?Sized>(machine: &M, inputs: &[u8]) -> Vec<u8> {
    let mut s = machine.initial_state();
    inputs.iter().map(|&i| machine.step(&mut s, i) & 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::format_bits;
    use proptest::prelude::*;

    fn toggler() -> CausalTransducer {
        // Emits 0,1,0,1,... ignoring its input.
        CausalTransducer::new(
            2,
            0,
            vec![
                Transition { next: 1, output: 0 },
                Transition { next: 1, output: 0 },
                Transition { next: 0, output: 1 },
                Transition { next: 0, output: 1 },
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn constant_world_ignores_regulator() {
        let world = CausalTransducer::memoryless(0, 0);
        let t = run_coupled(&world, &toggler(), 8).unwrap();
        assert_eq!(format_bits(&t.world_readout), "00000000");
        assert_eq!(format_bits(&t.regulator_output), "01010101");
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let m = null_regulator();
        assert!(matches!(
            run_coupled(&m, &m, 0),
            Err(AgarError::InvalidArgument(_))
        ));
    }

    #[test]
    fn null_regulator_code() {
        let null = null_regulator();
        assert_eq!(format_bits(&null.serialize()), "110011");
        assert_eq!(null.description_bits(), 6);
        let t = run_coupled(&toggler(), &null, 5).unwrap();
        assert_eq!(t.regulator_output, vec![0; 5]);
    }

    #[test]
    fn echo_world_sees_previous_regulator_symbol() {
        let echo = CausalTransducer::memoryless(0, 1);
        let t = run_coupled(&echo, &toggler(), 6).unwrap();
        // x_t = u_{t-1}, u_0 = 0
        assert_eq!(format_bits(&t.regulator_output), "010101");
        assert_eq!(format_bits(&t.world_readout), "001010");
    }

    #[test]
    fn padding_with_unreachable_states_lengthens_code() {
        let small = toggler();
        let mut transitions = small.transitions().to_vec();
        for s in 2..8u32 {
            transitions.push(Transition { next: s, output: 0 });
            transitions.push(Transition { next: s, output: 1 });
        }
        let padded = CausalTransducer::new(8, 0, transitions, 0).unwrap();
        // 2 states: gamma(2)=3, gamma(1)=1, 4 entries of 1+1 bits, trailer 2 -> 14.
        assert_eq!(small.description_bits(), 14);
        // 8 states: gamma(8)=7, gamma(1)=1, 16 entries of 3+1 bits, trailer 2 -> 74.
        assert_eq!(padded.description_bits(), 74);
        assert_eq!(padded.serialize().len(), 74);
        let x = run_coupled(&small, &null_regulator(), 16).unwrap();
        let y = run_coupled(&padded, &null_regulator(), 16).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn nonzero_initial_state_is_relabelled() {
        let m = CausalTransducer::new(
            2,
            1,
            vec![
                Transition { next: 0, output: 1 },
                Transition { next: 0, output: 1 },
                Transition { next: 0, output: 0 },
                Transition { next: 0, output: 0 },
            ],
            3,
        )
        .unwrap();
        let back = CausalTransducer::deserialize(&m.serialize()).unwrap();
        assert_eq!(back.initial(), 0);
        assert_eq!(back.scratch_capacity(), 3);
        let inputs = [0u8, 1, 1, 0, 1];
        assert_eq!(run_open_loop(&m, &inputs), run_open_loop(&back, &inputs));
    }

    #[test]
    fn deserialize_rejects_bad_marker_and_trailing_bits() {
        let mut bits = null_regulator().serialize();
        *bits.last_mut().unwrap() = 0;
        assert!(CausalTransducer::deserialize(&bits).is_err());
        let mut bits = null_regulator().serialize();
        bits.push(0);
        assert!(CausalTransducer::deserialize(&bits).is_err());
    }

    fn arb_machine() -> impl Strategy<Value = CausalTransducer> {
        (1u32..12, 0u32..5).prop_flat_map(|(n, scratch)| {
            (
                0..n,
                proptest::collection::vec((0..n, 0u8..2), 2 * n as usize),
            )
                .prop_map(move |(init, table)| {
                    let transitions = table
                        .into_iter()
                        .map(|(next, output)| Transition { next, output })
                        .collect();
                    CausalTransducer::new(n, init, transitions, scratch).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn serialization_roundtrip_preserves_transcripts(
            w in arb_machine(),
            r in arb_machine(),
            n in 1usize..40,
        ) {
            let ws = w.serialize();
            prop_assert_eq!(ws.len() as u64, w.description_bits());
            let w2 = CausalTransducer::deserialize(&ws).unwrap();
            let r2 = CausalTransducer::deserialize(&r.serialize()).unwrap();
            prop_assert_eq!(run_coupled(&w, &r, n).unwrap(), run_coupled(&w2, &r2, n).unwrap());
        }

        #[test]
        fn causality_prefix_replay(w in arb_machine(), r in arb_machine(), n in 2usize..30, cut in 1usize..29) {
            // Replaying the world open-loop against a regulator stream that is
            // truncated (zeroed) after step `cut` leaves x_1..x_{cut+1} unchanged.
            let cut = cut.min(n - 1);
            let t = run_coupled(&w, &r, n).unwrap();
            let mut inputs = vec![0u8];
            inputs.extend_from_slice(&t.regulator_output[..n - 1]);
            prop_assert_eq!(run_open_loop(&w, &inputs), t.world_readout.clone());
            let mut truncated = inputs.clone();
            for v in truncated.iter_mut().skip(cut + 1) {
                *v = 0;
            }
            let replay = run_open_loop(&w, &truncated);
            prop_assert_eq!(&replay[..=cut], &t.world_readout[..=cut]);
        }

        #[test]
        fn null_equivalence(w in arb_machine(), n in 1usize..40) {
            let t = run_coupled(&w, &null_regulator(), n).unwrap();
            prop_assert_eq!(t.world_readout, run_open_loop(&w, &vec![0u8; n]));
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let w = toggler();
        let r = CausalTransducer::memoryless(1, 0);
        let first = run_coupled(&w, &r, 64).unwrap();
        for _ in 0..100 {
            assert_eq!(run_coupled(&w, &r, 64).unwrap(), first);
        }
    }

    #[test]
    fn from_fn_assigns_initial_zero() {
        // counter mod 3 emitting 1 on wrap
        let m = CausalTransducer::from_fn(0u8, 16, |&s, _| ((s + 1) % 3, (s == 2) as u8)).unwrap();
        assert_eq!(m.state_count(), 3);
        assert_eq!(run_open_loop(&m, &[0; 6]), vec![0, 0, 1, 0, 0, 1]);
        assert!(CausalTransducer::from_fn(0u32, 4, |&s, _| (s + 1, 0)).is_err());
    }
}
