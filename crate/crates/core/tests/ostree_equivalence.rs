//! The order-statistic map against a brute-force sorted array: identical
//! answers under heavy interleaved churn, with logarithmic node visits.

mod common;

use common::SortedArrayOracle;
use envsamp_core::ostree::OrderStatMap;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[test]
fn interleaved_operations_match_the_naive_oracle() {
    let k = 1_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut values: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..100.0)).collect();
    let mut map = OrderStatMap::build(&values).unwrap();
    let mut oracle = SortedArrayOracle::build(&values);

    for step in 0..20_000u32 {
        if rng.gen_bool(0.5) {
            let i = rng.gen_range(0..k);
            let new = rng.gen_range(0.0..100.0);
            map.update(i as u64, values[i], new).unwrap();
            oracle.update(i as u64, values[i], new);
            values[i] = new;
        } else {
            let rank = rng.gen_range(1..=k);
            assert_eq!(map.kth_largest(rank).unwrap(), oracle.kth_largest(rank));
        }
        if step % 2_500 == 0 {
            map.assert_invariants();
        }
    }
    map.assert_invariants();
}

#[test]
fn duplicate_heavy_workload_matches() {
    // Many colliding values force the (value, index) tiebreak everywhere.
    let k = 300usize;
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut values: Vec<f64> = (0..k).map(|_| rng.gen_range(0..5) as f64).collect();
    let mut map = OrderStatMap::build(&values).unwrap();
    let mut oracle = SortedArrayOracle::build(&values);
    for _ in 0..5_000 {
        let i = rng.gen_range(0..k);
        let new = rng.gen_range(0..5) as f64;
        map.update(i as u64, values[i], new).unwrap();
        oracle.update(i as u64, values[i], new);
        values[i] = new;
        let rank = rng.gen_range(1..=k);
        assert_eq!(map.kth_largest(rank).unwrap(), oracle.kth_largest(rank));
    }
}

#[test]
fn visits_stay_logarithmic_under_churn() {
    let k = 4_096usize;
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let mut values: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut map = OrderStatMap::build(&values).unwrap();
    map.reset_counters();
    let ops = 40_000u64;
    for _ in 0..ops {
        if rng.gen_bool(0.5) {
            let i = rng.gen_range(0..k);
            let new = rng.gen_range(0.0..1.0);
            map.update(i as u64, values[i], new).unwrap();
            values[i] = new;
        } else {
            map.kth_largest(rng.gen_range(1..=k)).unwrap();
        }
    }
    let per_op = map.visits() as f64 / ops as f64;
    // An update is a remove + insert, each descending an AVL of height
    // ≈ 1.44·log2 K; rank queries descend once. 4·log2 K covers the mix.
    let bound = 4.0 * (k as f64).log2();
    assert!(per_op <= bound, "mean visits per op {per_op} exceeds {bound}");
}
