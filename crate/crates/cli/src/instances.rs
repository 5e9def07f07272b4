//! Flag resolution and seeded instance generation shared by the commands.

use envsamp_core::builders::{tree_ratio_bound, ClassTag, TREE_DEPTH_OFFSET};
use envsamp_core::zoo;

use crate::report::{Failure, Result};

/// Largest flat domain a command will materialize; generators and audits are
/// O(N) in time and memory, so this caps a run at about half a gigabyte.
pub const MAX_FLAT_DOMAIN: u64 = 1 << 26;

/// Deepest tree a command will materialize (2^25 − 1 vertices).
pub const MAX_TREE_DEPTH: u32 = 24;

/// Relative slack when comparing measured ratios against proved bounds, so
/// summation order in the audit cannot flip a verdict on an exact-bound case.
pub const BOUND_SLACK: f64 = 1e-9;

/// Resolve `--N`/`--depth` into a domain size for `class`: flat classes are
/// sized by `--N`, the tree class by `--depth`, and mixing them is an error.
pub fn resolve_domain(class: ClassTag, n: Option<u64>, depth: Option<u32>) -> Result<u64> {
    match class {
        ClassTag::Tree => {
            if n.is_some() {
                return Err(Failure::invalid("the tree class is sized by --depth, not --N"));
            }
            let Some(ell) = depth else {
                return Err(Failure::invalid("the tree class needs --depth"));
            };
            if ell > MAX_TREE_DEPTH {
                return Err(Failure::invalid(format!(
                    "--depth {ell} exceeds the limit {MAX_TREE_DEPTH}"
                )));
            }
            Ok((1u64 << (ell + 1)) - 1)
        }
        _ => {
            if depth.is_some() {
                return Err(Failure::invalid(format!(
                    "--depth only applies to the tree class, not {class}"
                )));
            }
            let Some(n) = n else {
                return Err(Failure::invalid(format!("class {class} needs --N")));
            };
            if n == 0 || n > MAX_FLAT_DOMAIN {
                return Err(Failure::invalid(format!("--N {n} outside [1, {MAX_FLAT_DOMAIN}]")));
            }
            Ok(n)
        }
    }
}

/// Tree depth ℓ for a vertex count of the form 2^(ℓ+1) − 1.
pub fn tree_depth(len: u64) -> u32 {
    debug_assert!((len + 1).is_power_of_two());
    (len + 1).ilog2() - 1
}

/// A seeded dense instance of `class` on `len` points (heap order for trees).
pub fn dense_instance(class: ClassTag, len: u64, seed: u64) -> Vec<f64> {
    match class {
        ClassTag::Monotone => zoo::gen_monotone(len, seed),
        ClassTag::Unimodal => zoo::gen_unimodal(len, seed),
        ClassTag::LogConcave => zoo::gen_logconcave(len, seed),
        ClassTag::Tree => zoo::gen_tree(tree_depth(len), seed),
    }
}

/// Proved mass-ratio bound for `class` on a domain of `len` points.
pub fn ratio_bound(class: ClassTag, len: u64) -> f64 {
    match class {
        ClassTag::Monotone | ClassTag::Unimodal => 2.0,
        ClassTag::LogConcave => 4.0,
        ClassTag::Tree => tree_ratio_bound(tree_depth(len), TREE_DEPTH_OFFSET),
    }
}

/// clap value parser for shape classes.
pub fn parse_class(s: &str) -> Result<ClassTag, String> {
    s.parse().map_err(|e: envsamp_core::Error| e.to_string())
}
