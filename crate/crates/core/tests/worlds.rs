use agar_core::machine::{run_coupled, CausalTransducer};
use agar_core::worlds::{
    build_regulator, plant_trace, AnyWorld, RegulatorKind, ThermostatParams, ThermostatWorld, WorldSpec,
};

const BURN_IN_FRAMES: usize = 50;

#[test]
fn bang_bang_holds_temperature_near_setpoint() {
    let deadband = 0.5;
    let horizon = 4096;
    for seed in 1..=20u64 {
        let p = ThermostatParams {
            seed,
            ..ThermostatParams::default()
        };
        let w = ThermostatWorld::new(p.clone()).unwrap();
        let ctx = AnyWorld::Thermostat(w.clone()).readout_context(horizon);
        let reg = build_regulator(&RegulatorKind::BangBang { deadband }, &ctx).unwrap();
        let bound = deadband + w.quantizer().step() + p.heater_gain * p.dt;
        let trace = plant_trace(&w, &reg, horizon).unwrap();
        assert!(trace.len() > BURN_IN_FRAMES * 2);
        for s in &trace[BURN_IN_FRAMES..] {
            assert!((s.temp - p.setpoint).abs() <= bound, "seed {seed} t {}: {}", s.t, s.temp);
        }
    }
}

#[test]
fn built_machines_round_trip() {
    let horizon = 256;
    let worlds = [
        WorldSpec::Latch { watch_length: 4, z_seed: 3 },
        WorldSpec::Xor { z_seed: 5 },
        WorldSpec::Lfsr { width: 8, taps: vec![8, 6, 5, 4], init: 1 },
        WorldSpec::Constant { symbol: 1 },
    ];
    let therm = WorldSpec::Thermostat(ThermostatParams::default()).build(1, horizon).unwrap();
    let regulators = [
        RegulatorKind::Null,
        RegulatorKind::Constant { symbol: 1 },
        RegulatorKind::BangBang { deadband: 0.5 },
        RegulatorKind::Pi { kp: 2.0, ki: 0.1, quant: 0.25 },
        RegulatorKind::Random { seed: 9 },
        RegulatorKind::Tabular { table: "1:0,0:1;0:1,1:0".into() },
    ];
    for kind in &regulators {
        let reg = build_regulator(kind, &therm.readout_context(horizon)).unwrap();
        let back = CausalTransducer::deserialize(&reg.serialize()).unwrap();
        assert_eq!(run_coupled(&therm, &reg, horizon).unwrap(), run_coupled(&therm, &back, horizon).unwrap());
    }
    for spec in &worlds {
        let AnyWorld::Transducer(w) = spec.build(2, horizon).unwrap() else {
            panic!("transducer world expected");
        };
        let back = CausalTransducer::deserialize(&w.serialize()).unwrap();
        let reg = build_regulator(&RegulatorKind::Random { seed: 4 }, &agar_core::worlds::ReadoutContext::binary(horizon)).unwrap();
        assert_eq!(run_coupled(&w, &reg, horizon).unwrap(), run_coupled(&back, &reg, horizon).unwrap());
    }
}
