use agar_core::bits::random_bits;
use agar_core::ctm::build_ctm_table;

fn block(v: u32, b: usize) -> Vec<u8> {
    (0..b).map(|i| ((v >> (b - 1 - i)) & 1) as u8).collect()
}

#[test]
fn block_permutations_leave_bdm_unchanged() {
    let b = 3;
    let t = build_ctm_table(b, 16, 10_000).unwrap();
    let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for v in 0u32..(1 << (3 * b)) {
        let blocks: Vec<Vec<u8>> = (0..3).map(|i| block((v >> (b * i)) & 0b111, b)).collect();
        let base = t.bdm(&blocks.concat()).unwrap().bits_x64;
        for o in orders {
            let x: Vec<u8> = o.iter().flat_map(|&i| blocks[i].clone()).collect();
            assert_eq!(t.bdm(&x).unwrap().bits_x64, base);
        }
    }
}

#[test]
fn duplicating_a_block_adds_log_ratio() {
    let b = 4;
    let t = build_ctm_table(b, 18, 10_000).unwrap();
    for seed in 0..200u64 {
        let x = random_bits(seed, b * (2 + seed as usize % 10));
        let first = x[..b].to_vec();
        let m = x.chunks_exact(b).filter(|c| *c == first.as_slice()).count() as f64;
        let mut y = x.clone();
        y.extend(&first);
        let before = t.bdm_bits(&x).unwrap().0;
        let after = t.bdm_bits(&y).unwrap().0;
        assert!((after - before - ((m + 1.0) / m).log2()).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn table_is_normalized_and_nonnegative() {
    for b in 1..=6 {
        let t = build_ctm_table(b, 18, 10_000).unwrap();
        assert!((t.normalization_sum() - 1.0).abs() <= 2f64.powi(-20), "b={b}");
        assert!(t.entries().all(|(_, k)| k >= 0.0));
        assert!(t.coverage() > 0.0 && t.coverage() <= 1.0);
    }
}
