//! Helpers shared by the integration suites.
#![allow(dead_code)]

use envsamp_core::builders::ClassTag;
use envsamp_core::zoo;

/// Brute-force reference for the order-statistic map: a sorted array kept in
/// ascending `(value, index)` order, every operation linear-time and obvious.
pub struct SortedArrayOracle {
    entries: Vec<(f64, u64)>,
}

impl SortedArrayOracle {
    pub fn build(values: &[f64]) -> Self {
        let mut entries: Vec<(f64, u64)> =
            values.iter().enumerate().map(|(i, &v)| (v, i as u64)).collect();
        entries.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { entries }
    }

    pub fn kth_largest(&self, k: usize) -> (f64, u64) {
        self.entries[self.entries.len() - k]
    }

    pub fn update(&mut self, index: u64, old: f64, new: f64) {
        let at = self
            .entries
            .binary_search_by(|e| e.partial_cmp(&(old, index)).unwrap())
            .expect("entry present");
        self.entries.remove(at);
        let at =
            self.entries.binary_search_by(|e| e.partial_cmp(&(new, index)).unwrap()).unwrap_err();
        self.entries.insert(at, (new, index));
    }
}

/// A seeded instance of `class` on a domain of `n` points (for trees, `n`
/// must be `2^(ℓ+1) − 1` and the depth is derived).
pub fn generate(class: ClassTag, n: u64, seed: u64) -> Vec<f64> {
    match class {
        ClassTag::Monotone => zoo::gen_monotone(n, seed),
        ClassTag::Unimodal => zoo::gen_unimodal(n, seed),
        ClassTag::LogConcave => zoo::gen_logconcave(n, seed),
        ClassTag::Tree => {
            let ell = (n + 1).ilog2() - 1;
            zoo::gen_tree(ell, seed)
        }
    }
}
