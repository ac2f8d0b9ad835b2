use agar_core::bits::{length_header_len, random_bits};
use agar_core::codec::mixture::mixture_bits;
use agar_core::codec::{lz78, lzw, Estimator, MixtureModelClass};
use proptest::prelude::*;

/// Order-d KT probability recomputed per order from explicit context keys.
fn kt_order_log2(x: &[u8], d: usize) -> f64 {
    let mut counts = std::collections::HashMap::<Vec<u8>, [f64; 2]>::new();
    let mut lp = 0.0;
    for t in 0..x.len() {
        let ctx: Vec<u8> = (1..=d).map(|j| if t >= j { x[t - j] } else { 0 }).collect();
        let c = counts.entry(ctx).or_insert([0.0; 2]);
        let b = x[t] as usize;
        lp += ((c[b] + 0.5) / (c[0] + c[1] + 1.0)).log2();
        c[b] += 1.0;
    }
    lp
}

#[test]
fn ten_thousand_roundtrips() {
    for seed in 0..10_000u64 {
        let x = random_bits(seed ^ 0xC0DEC, (seed as usize * 104_729) % 1200);
        let a = lz78::encode(&x);
        assert_eq!(a.len() as u64, lz78::codelength_bits(&x));
        assert_eq!(lz78::decode(&a).unwrap(), (x.clone(), a.len()));
        let b = lzw::encode(&x);
        assert_eq!(b.len() as u64, lzw::codelength_bits(&x));
        assert_eq!(lzw::decode(&b).unwrap(), (x.clone(), b.len()));
    }
}

#[test]
fn lz78_subadditivity_proxy() {
    for seed in 0..1000u64 {
        let x = random_bits(2 * seed, 50 + (seed as usize * 31) % 900);
        let y = random_bits(2 * seed + 1, 50 + (seed as usize * 17) % 900);
        let xy: Vec<u8> = x.iter().chain(&y).copied().collect();
        let slack = 2 * length_header_len(xy.len());
        assert!(
            lz78::codelength_bits(&xy) <= lz78::codelength_bits(&x) + lz78::codelength_bits(&y) + slack,
            "seed {seed}"
        );
    }
}

#[test]
fn mixture_dominates_every_order() {
    for d_max in [2u8, 6, 12] {
        let class = MixtureModelClass::new(d_max).unwrap();
        for seed in 0..500u64 {
            let x = random_bits(seed, 256);
            let mix = mixture_bits(&x, class);
            for d in 0..=d_max {
                let single = -kt_order_log2(&x, d as usize) - class.prior_log2(d);
                assert!(mix <= single + 0.02, "D={d_max} seed {seed} order {d}");
            }
        }
    }
}

#[test]
fn mixture_zeros_are_cheap() {
    let c = MixtureModelClass::new(2).unwrap();
    assert!(mixture_bits(&[0u8; 1024], c) <= 12.0);
}

#[test]
fn lzw_rate_on_zeros_falls() {
    let rates: Vec<f64> = (6..=14)
        .map(|k| lzw::codelength_bits(&vec![0u8; 1 << k]) as f64 / f64::from(1u32 << k))
        .collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
}

proptest! {
    #[test]
    fn estimators_report_whole_fixed_point_units(x in proptest::collection::vec(0u8..2, 0..400)) {
        for est in [Estimator::Lz78, Estimator::Lzw] {
            let r = est.codelength(&x).unwrap();
            prop_assert_eq!(r.bits_x64 % 64, 0);
            prop_assert_eq!(r.n, x.len() as u64);
        }
        let m = Estimator::Mixture(MixtureModelClass::new(3).unwrap()).codelength(&x).unwrap();
        prop_assert!(m.bits() >= length_header_len(x.len()) as f64);
    }

    #[test]
    fn decoders_stop_at_stream_end(x in proptest::collection::vec(0u8..2, 0..300), tail in proptest::collection::vec(0u8..2, 0..20)) {
        let mut a = lz78::encode(&x);
        let used = a.len();
        a.extend(&tail);
        prop_assert_eq!(lz78::decode(&a).unwrap(), (x.clone(), used));
        let mut b = lzw::encode(&x);
        let used = b.len();
        b.extend(&tail);
        prop_assert_eq!(lzw::decode(&b).unwrap(), (x, used));
    }
}
