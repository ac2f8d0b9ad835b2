use agar_core::bits::random_bits;
use agar_core::codec::Estimator;
use agar_core::contrast::{permutation_test, run_contrast, ContrastConfig};
use agar_core::worlds::{RegulatorKind, ThermostatParams, WorldSpec};

const ALPHA: f64 = 0.05;

#[test]
fn sign_flip_test_is_calibrated_on_exchangeable_legs() {
    // both legs are independent draws from the same source
    let mut rejections = 0;
    for rep in 0..200u64 {
        let deltas: Vec<i64> = (0..20u64)
            .map(|ep| {
                let on = random_bits(rep * 1000 + 2 * ep, 512);
                let off = random_bits(rep * 1000 + 2 * ep + 1, 512);
                let a = Estimator::Lz78.codelength_x64(&on).unwrap() as i64;
                let b = Estimator::Lz78.codelength_x64(&off).unwrap() as i64;
                b - a
            })
            .collect();
        if permutation_test(&deltas, 2000, rep).unwrap() < ALPHA {
            rejections += 1;
        }
    }
    assert!(f64::from(rejections) / 200.0 <= ALPHA, "{rejections} rejections");
}

#[test]
fn null_legs_never_reject() {
    for world in [
        WorldSpec::Thermostat(ThermostatParams::default()),
        WorldSpec::Xor { z_seed: 1 },
        WorldSpec::Latch { watch_length: 3, z_seed: 1 },
    ] {
        let cfg = ContrastConfig::new(world, RegulatorKind::Null, 512, Estimator::Lzw, (1..=8).collect());
        let r = run_contrast(&cfg).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(r.deltas().iter().all(|&d| d == 0));
    }
}

#[test]
fn mixed_estimators_are_rejected() {
    let cfg = ContrastConfig::new(
        WorldSpec::Xor { z_seed: 2 },
        RegulatorKind::Random { seed: 1 },
        256,
        Estimator::Lz78,
        vec![1, 2, 3],
    );
    let mut r = run_contrast(&cfg).unwrap();
    r.validate().unwrap();
    r.episodes[1].estimator = Some(Estimator::Lzw.id());
    assert!(r.validate().is_err());
}

#[test]
fn report_json_is_reproducible() {
    let cfg = ContrastConfig::new(
        WorldSpec::Thermostat(ThermostatParams::default()),
        RegulatorKind::Pi { kp: 2.0, ki: 0.1, quant: 0.25 },
        1024,
        Estimator::Lz78,
        (1..=6).collect(),
    );
    let a = serde_json::to_vec(&run_contrast(&cfg).unwrap()).unwrap();
    let b = serde_json::to_vec(&run_contrast(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}
