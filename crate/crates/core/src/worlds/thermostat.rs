//! First-order thermal plant with an on/off heater, observed through a
//! quantized error readout sent one bit per interface step.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codec::Quantizer;
use crate::error::{invalid, Result};
use crate::machine::{run_coupled_observed, Describe, Machine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermostatParams {
    /// Seconds per plant step.
    pub dt: f64,
    /// Thermal time constant in seconds.
    pub tau: f64,
    /// Mean outdoor temperature.
    pub outdoor_temp: f64,
    /// Temperature gain per plant step with the heater on.
    pub heater_gain: f64,
    pub setpoint: f64,
    pub initial_temp: f64,
    /// Bits per error sample; one plant step spans this many interface steps.
    pub readout_bits: u32,
    /// The error readout covers `[-error_span, error_span]`.
    pub error_span: f64,
    pub outdoor_amplitude: f64,
    /// Period of the outdoor sinusoid in seconds.
    pub outdoor_period: f64,
    /// Standard deviation of the per-step temperature disturbance.
    pub disturbance_std: f64,
    pub seed: u64,
}

impl Default for ThermostatParams {
    fn default() -> Self {
        ThermostatParams {
            dt: 1.0,
            tau: 50.0,
            outdoor_temp: 15.0,
            heater_gain: 0.15,
            setpoint: 20.0,
            initial_temp: 20.0,
            readout_bits: 6,
            error_span: 8.0,
            outdoor_amplitude: 2.0,
            outdoor_period: 200.0,
            disturbance_std: 0.05,
            seed: 0,
        }
    }
}

impl ThermostatParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.dt,
            self.tau,
            self.outdoor_temp,
            self.heater_gain,
            self.setpoint,
            self.initial_temp,
            self.error_span,
            self.outdoor_amplitude,
            self.outdoor_period,
            self.disturbance_std,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return invalid("thermostat parameters must be finite");
        }
        if self.dt <= 0.0 || self.tau <= 0.0 {
            return invalid("dt and tau must be positive");
        }
        if self.dt / self.tau >= 1.0 {
            return invalid(format!(
                "dt/tau = {} must be below 1 for a stable update",
                self.dt / self.tau
            ));
        }
        if !(1..=16).contains(&self.readout_bits) {
            return invalid(format!("readout_bits must be in [1, 16], got {}", self.readout_bits));
        }
        if self.error_span <= 0.0 {
            return invalid("error_span must be positive");
        }
        if self.outdoor_period <= 0.0 {
            return invalid("outdoor_period must be positive");
        }
        if self.disturbance_std < 0.0 {
            return invalid("disturbance_std must be non-negative");
        }
        Ok(())
    }

    pub fn quantizer(&self) -> Quantizer {
        Quantizer::new(self.readout_bits, -self.error_span, self.error_span)
            .expect("validated parameters give a valid quantizer")
    }

    pub fn outdoor_at(&self, plant_step: u64) -> f64 {
        let phase = 2.0 * PI * plant_step as f64 * self.dt / self.outdoor_period;
        self.outdoor_temp + self.outdoor_amplitude * phase.sin()
    }
}

#[derive(Debug, Clone)]
pub struct ThermostatWorld {
    params: ThermostatParams,
    quantizer: Quantizer,
    noise: Option<Normal<f64>>,
}

#[derive(Debug, Clone)]
pub struct ThermostatState {
    /// Completed plant updates.
    pub plant_step: u64,
    /// Position within the current readout frame.
    pub bit: u32,
    pub temp: f64,
    /// Heater symbol applied at the last plant update.
    pub heat: u8,
    pub code: u32,
    rng: ChaCha8Rng,
}

impl ThermostatWorld {
    pub fn new(params: ThermostatParams) -> Result<Self> {
        params.validate()?;
        let noise = (params.disturbance_std > 0.0)
            .then(|| Normal::new(0.0, params.disturbance_std).expect("validated std"));
        Ok(ThermostatWorld {
            quantizer: params.quantizer(),
            params,
            noise,
        })
    }

    pub fn params(&self) -> &ThermostatParams {
        &self.params
    }

    pub fn quantizer(&self) -> Quantizer {
        self.quantizer
    }

    fn error_code(&self, temp: f64) -> u32 {
        self.quantizer
            .code(temp - self.params.setpoint)
            .expect("plant temperature is never NaN")
    }
}

impl Machine for ThermostatWorld {
    type State = ThermostatState;

    fn initial_state(&self) -> ThermostatState {
        ThermostatState {
            plant_step: 0,
            bit: 0,
            temp: self.params.initial_temp,
            heat: 0,
            code: self.error_code(self.params.initial_temp),
            rng: ChaCha8Rng::seed_from_u64(self.params.seed),
        }
    }

    fn step(&self, s: &mut ThermostatState, input: u8) -> u8 {
        let p = &self.params;
        if s.bit == p.readout_bits {
            let outdoor = p.outdoor_at(s.plant_step);
            let mut t = s.temp + p.dt * (-(s.temp - outdoor) / p.tau)
                + p.heater_gain * f64::from(input & 1);
            if let Some(n) = &self.noise {
                t += n.sample(&mut s.rng);
            }
            s.temp = t;
            s.heat = input & 1;
            s.plant_step += 1;
            s.bit = 0;
            s.code = self.error_code(t);
        }
        let out = ((s.code >> (p.readout_bits - 1 - s.bit)) & 1) as u8;
        s.bit += 1;
        out
    }
}

impl Describe for ThermostatWorld {
    /// The parameter record as JSON bytes, one symbol per bit.
    fn description(&self) -> Vec<u8> {
        let json = serde_json::to_vec(&self.params).expect("parameters serialize");
        crate::bits::unpack_bytes(&json, json.len() * 8)
    }
}

/// One plant step of a coupled run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantSample {
    pub t: u64,
    pub temp: f64,
    pub heat: u8,
    pub error_code: u32,
}

/// Runs the coupled loop and records the plant at the start of every frame.
pub fn plant_trace<R: Machine + ?Sized>(
    world: &ThermostatWorld,
    regulator: &R,
    horizon: usize,
) -> Result<Vec<PlantSample>> {
    let mut samples = Vec::new();
    run_coupled_observed(world, regulator, horizon, |_, s: &ThermostatState, _, _| {
        if s.bit == 1 {
            samples.push(PlantSample {
                t: s.plant_step,
                temp: s.temp,
                heat: s.heat,
                error_code: s.code,
            });
        }
    })?;
    Ok(samples)
}

/// CSV `t,T,heat,error_code`.
pub fn plant_trace_csv(samples: &[PlantSample]) -> String {
    let mut s = String::from("t,T,heat,error_code\n");
    for p in samples {
        s.push_str(&format!("{},{:.6},{},{}\n", p.t, p.temp, p.heat, p.error_code));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{null_regulator, run_coupled};

    fn quiet() -> ThermostatParams {
        ThermostatParams {
            outdoor_amplitude: 0.0,
            disturbance_std: 0.0,
            ..ThermostatParams::default()
        }
    }

    #[test]
    fn fixed_point_gives_constant_codes() {
        let p = ThermostatParams {
            outdoor_temp: 20.0,
            ..quiet()
        };
        let w = ThermostatWorld::new(p.clone()).unwrap();
        let trace = plant_trace(&w, &null_regulator(), 600).unwrap();
        let mid = 1 << (p.readout_bits - 1);
        assert!(trace.iter().all(|s| s.error_code == mid));
        let x = run_coupled(&w, &null_regulator(), 60).unwrap().world_readout;
        assert_eq!(&x[..6], &[1, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn free_decay_matches_closed_form() {
        let p = ThermostatParams {
            initial_temp: 25.0,
            outdoor_temp: 5.0,
            tau: 50.0,
            setpoint: 20.0,
            error_span: 12.0,
            readout_bits: 8,
            ..quiet()
        };
        let w = ThermostatWorld::new(p.clone()).unwrap();
        let trace = plant_trace(&w, &null_regulator(), 8 * 400).unwrap();
        for s in &trace {
            let expected = 5.0 + 20.0 * (1.0 - 1.0 / 50.0f64).powi(s.t as i32);
            assert!((s.temp - expected).abs() < 1e-9);
        }
        let codes: Vec<u32> = trace.iter().map(|s| s.error_code).collect();
        let floor = codes.iter().position(|&c| c == 0).unwrap();
        assert!(codes[..floor].windows(2).all(|w| w[0] >= w[1]));
        assert!(codes[..floor].first() > codes[..floor].last());
        assert!(codes[floor..].iter().all(|&c| c == 0));
    }

    #[test]
    fn invalid_params() {
        for p in [
            ThermostatParams { dt: 0.0, ..quiet() },
            ThermostatParams { tau: 0.5, ..quiet() },
            ThermostatParams { readout_bits: 17, ..quiet() },
            ThermostatParams { error_span: -1.0, ..quiet() },
            ThermostatParams { setpoint: f64::NAN, ..quiet() },
        ] {
            assert!(ThermostatWorld::new(p).is_err());
        }
    }
}
