//! Shape-aware envelope construction from few oracle queries.
//!
//! Each builder turns structural knowledge about the target — non-increasing,
//! strictly unimodal, log-concave with mode at 1, or tree-monotone — into a
//! dominating envelope whose total mass is within a small factor of the
//! target's, while touching the oracle only polylogarithmically often (the
//! tree class needs `2^(ℓ0+1) − 1` points, still well sublinear):
//!
//! * [`build_monotone`] — dyadic blocks `(2^i, 2^(i+1)]` at height `p̃(2^i)`;
//!   at most `⌈log2 N⌉` queries and mass ratio at most 2.
//! * [`build_unimodal`] — binary-searches the mode, then applies the dyadic
//!   construction rightward from the mode and mirrored leftward; at most
//!   `5⌈log2 N⌉` queries, ratio at most 2.
//! * [`build_logconcave`] — binary-searches the first `i` with
//!   `p̃(2^i) ≤ p̃(1)/2` and hangs a geometric tail from `x0 = 2^i`; at most
//!   `⌈log2⌈log2 N⌉⌉ + 3` queries, ratio at most 4.
//! * [`build_tree_monotone`] — queries every vertex to depth ℓ0 (exact
//!   singleton coverage there) and covers each remaining subtree by one
//!   constant block at its root's mass.
//!
//! Builders trust their shape precondition: feeding a non-member silently
//! yields an envelope that may not dominate. Cheap certificates do not exist
//! in the query model, so membership checking lives in [`crate::zoo`] (dense
//! scans) and violations surface at sampling time as dominance errors.
//!
//! All query points are chosen by index arithmetic and value *comparisons*
//! only, never by absolute magnitudes, so builds are invariant under scaling
//! of the oracle: `c·p̃` yields exactly the envelope of `p̃` with heights
//! multiplied by `c`. That is what "known only up to normalization" means
//! operationally.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::envelope::{Envelope, Segment};
use crate::error::{Error, Result};
use crate::oracle::QueryCountedPmf;
use crate::scalar::Real;
use crate::util::ceil_log2;

/// Default depth offset for [`build_tree_monotone`]: the exact region extends
/// to `ℓ − ⌊log2 ℓ⌋ + TREE_DEPTH_OFFSET` (capped at ℓ).
pub const TREE_DEPTH_OFFSET: u32 = 1;

/// Distribution shape class a builder targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Monotone,
    Unimodal,
    #[serde(rename = "logconcave")]
    LogConcave,
    Tree,
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassTag::Monotone => "monotone",
            ClassTag::Unimodal => "unimodal",
            ClassTag::LogConcave => "logconcave",
            ClassTag::Tree => "tree",
        })
    }
}

impl std::str::FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotone" => Ok(ClassTag::Monotone),
            "unimodal" => Ok(ClassTag::Unimodal),
            "logconcave" => Ok(ClassTag::LogConcave),
            "tree" => Ok(ClassTag::Tree),
            other => Err(Error::InvalidParam(format!("unknown class {other:?}"))),
        }
    }
}

/// Landmarks a builder discovered along the way, for reports and debugging.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Mode location found by the unimodal bisection.
    pub mode: Option<u64>,
    /// Log-concave half-mass crossover point `x0 = 2^i` (tail start).
    pub crossover: Option<u64>,
    /// Tree depth up to which the envelope is exact (ℓ0).
    pub exact_depth: Option<u32>,
}

/// Envelope plus the measured cost of building it.
#[derive(Clone, Debug)]
pub struct BuildReport<S> {
    pub envelope: Envelope<S>,
    /// Oracle counter delta across the build.
    pub queries_used: u64,
    pub class: ClassTag,
    pub diagnostics: Diagnostics,
}

impl<S: Real> BuildReport<S> {
    pub fn to_json(&self) -> String {
        let env: serde_json::Value =
            serde_json::from_str(&self.envelope.to_json()).expect("envelope JSON");
        serde_json::json!({
            "class": self.class.to_string(),
            "queries_used": self.queries_used,
            "diagnostics": self.diagnostics,
            "envelope": env,
        })
        .to_string()
    }
}

/// Worst-case oracle queries the builder for `class` may spend on a domain of
/// `domain_size` points (for [`ClassTag::Tree`], the vertex count
/// `2^(ℓ+1) − 1`; the tree budget is exact, not just an upper bound).
pub fn query_budget(class: ClassTag, domain_size: u64) -> u64 {
    let lg = ceil_log2(domain_size) as u64;
    match class {
        ClassTag::Monotone => lg + 1,
        ClassTag::Unimodal => (5 * lg).max(1),
        ClassTag::LogConcave => ceil_log2(lg.max(1)) as u64 + 3,
        ClassTag::Tree => {
            let ell = tree_depth_for_len(domain_size).expect("heap-shaped domain");
            let l0 = tree_exact_depth(ell, TREE_DEPTH_OFFSET);
            (1u64 << (l0 + 1)) - 1
        }
    }
}

/// Dispatch to the builder for `class`.
pub fn build_for_class<S: Real>(
    class: ClassTag,
    pmf: &QueryCountedPmf<S>,
) -> Result<BuildReport<S>> {
    match class {
        ClassTag::Monotone => build_monotone(pmf),
        ClassTag::Unimodal => build_unimodal(pmf),
        ClassTag::LogConcave => build_logconcave(pmf),
        ClassTag::Tree => build_tree_monotone(pmf),
    }
}

/// Depth ℓ0 of the exact region: `min(ℓ, ℓ − ⌊log2 ℓ⌋ + c)`, with ℓ0 = 0 for
/// the single-vertex tree.
pub fn tree_exact_depth(ell: u32, c: u32) -> u32 {
    if ell == 0 {
        return 0;
    }
    ell.min(ell - ell.ilog2() + c)
}

/// Proven mass-ratio bound for the tree construction at depth ℓ with offset
/// c: `1 + (2^(ℓ−ℓ0+1) − 2)/(ℓ0 + 1)` (1 when the envelope is exact).
pub fn tree_ratio_bound(ell: u32, c: u32) -> f64 {
    let l0 = tree_exact_depth(ell, c);
    if l0 >= ell {
        return 1.0;
    }
    1.0 + (((1u64 << (ell - l0 + 1)) - 2) as f64) / ((l0 + 1) as f64)
}

fn tree_depth_for_len(len: u64) -> Result<u32> {
    if len == 0 || !(len + 1).is_power_of_two() {
        return Err(Error::InvalidParam(format!(
            "domain size {len} is not 2^(depth+1) − 1 for any depth"
        )));
    }
    Ok((len + 1).ilog2() - 1)
}

/// Dyadic envelope for a non-increasing target: heights `p̃(2^i)` over the
/// blocks `(2^i, 2^(i+1)] ∩ [N]`, with `[1, 2]` at height `p̃(1)`.
pub fn build_monotone<S: Real>(pmf: &QueryCountedPmf<S>) -> Result<BuildReport<S>> {
    let n = pmf.domain_size();
    let start = pmf.queries();
    let segments = monotone_segments(pmf, 1, n, Side::Right)?;
    Ok(BuildReport {
        envelope: Envelope::from_segments(segments)?,
        queries_used: pmf.queries() - start,
        class: ClassTag::Monotone,
        diagnostics: Diagnostics::default(),
    })
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum Side {
    /// Non-increasing away from `anchor` toward larger indices.
    Right,
    /// Non-increasing away from `anchor` toward smaller indices.
    Left,
}

/// Dyadic block construction measured from `anchor`, covering `len` points
/// (`anchor` itself included for `Right`, excluded for `Left`, whose blocks
/// cover `[anchor − len, anchor − 1]`). Offsets y ∈ [1, len] map to index
/// `anchor + y − 1` (right) or `anchor − y` (left).
fn monotone_segments<S: Real>(
    pmf: &QueryCountedPmf<S>,
    anchor: u64,
    len: u64,
    side: Side,
) -> Result<Vec<Segment<S>>> {
    monotone_blocks(&mut |x| pmf.query(x), anchor, len, side)
}

/// The same construction with the point oracle abstracted out, so it can run
/// over any non-increasing view — in particular the bandit player's rank
/// space, where a "query" is an order-statistic lookup rather than a PMF
/// call.
pub(crate) fn monotone_blocks<S: Real>(
    query: &mut dyn FnMut(u64) -> Result<S>,
    anchor: u64,
    len: u64,
    side: Side,
) -> Result<Vec<Segment<S>>> {
    debug_assert!(len >= 1);
    let index_of = |y: u64| match side {
        Side::Right => anchor + y - 1,
        Side::Left => anchor - y,
    };
    let block = |y_lo: u64, y_hi: u64, height: S| {
        debug_assert!(y_lo <= y_hi);
        match side {
            Side::Right => Segment::ConstBlock { lo: index_of(y_lo), hi: index_of(y_hi), height },
            Side::Left => Segment::ConstBlock { lo: index_of(y_hi), hi: index_of(y_lo), height },
        }
    };
    // In offset space the first block is [1, 2] at the offset-1 height, then
    // (2^i, 2^(i+1)] at the offset-2^i height.
    let mut segments = Vec::new();
    let h1 = query(index_of(1))?;
    segments.push(block(1, 2.min(len), h1));
    let mut i = 0u32;
    while (1u64 << (i + 1)) < len {
        i += 1;
        let y = 1u64 << i;
        let h = query(index_of(y))?;
        segments.push(block(y + 1, (1u64 << (i + 1)).min(len), h));
    }
    if side == Side::Left {
        segments.reverse();
    }
    Ok(segments)
}

/// Locate the unique argmax of a strictly unimodal target by bisection on the
/// rising edge; at most `2⌈log2 N⌉` queries. A probed tie `p̃(mid) = p̃(mid+1)`
/// contradicts strictness and is reported as a class violation.
pub fn find_mode<S: Real>(pmf: &QueryCountedPmf<S>) -> Result<u64> {
    let n = pmf.domain_size();
    let mut lo = 1u64;
    let mut hi = n;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let a = pmf.query(mid)?;
        let b = pmf.query(mid + 1)?;
        if a == b {
            return Err(Error::ClassViolation {
                index: mid,
                detail: format!("plateau {a} at adjacent points {mid}, {}", mid + 1),
            });
        }
        if a < b {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Envelope for a strictly unimodal target: find the mode m, then apply the
/// dyadic construction on `[m, N]` and its mirror image on `[1, m−1]` (the
/// mode belongs to the right part, so its mass is counted once).
pub fn build_unimodal<S: Real>(pmf: &QueryCountedPmf<S>) -> Result<BuildReport<S>> {
    let n = pmf.domain_size();
    let start = pmf.queries();
    let mode = find_mode(pmf)?;
    let mut segments = Vec::new();
    if mode > 1 {
        segments.extend(monotone_segments(pmf, mode, mode - 1, Side::Left)?);
    }
    segments.extend(monotone_segments(pmf, mode, n - mode + 1, Side::Right)?);
    Ok(BuildReport {
        envelope: Envelope::from_segments(segments)?,
        queries_used: pmf.queries() - start,
        class: ClassTag::Unimodal,
        diagnostics: Diagnostics { mode: Some(mode), ..Diagnostics::default() },
    })
}

/// Envelope for a log-concave target with mode at 1: constant at `p̃(1)` up to
/// the half-mass crossover `x0 = 2^i` (the first dyadic point whose mass has
/// dropped to half of `p̃(1)` or below, found by bisection over i), then the
/// geometric tail through `(1, p̃(1))` and `(x0, p̃(x0))`. If the mass never
/// halves inside the domain the constant envelope is returned; if
/// `p̃(x0) = 0`, contiguous support means everything from `x0` on is zero and
/// the tail degenerates to a zero block.
pub fn build_logconcave<S: Real>(pmf: &QueryCountedPmf<S>) -> Result<BuildReport<S>> {
    let n = pmf.domain_size();
    let start = pmf.queries();
    let p1 = pmf.query(1)?;
    let report = |segments, crossover, queries| -> Result<BuildReport<S>> {
        Ok(BuildReport {
            envelope: Envelope::from_segments(segments)?,
            queries_used: queries,
            class: ClassTag::LogConcave,
            diagnostics: Diagnostics { crossover, ..Diagnostics::default() },
        })
    };
    if n == 1 {
        let segments = vec![Segment::ConstBlock { lo: 1, hi: 1, height: p1 }];
        return report(segments, None, pmf.queries() - start);
    }

    let half = p1 / S::from_f64_lossy(2.0);
    let mut cache: HashMap<u32, S> = HashMap::new();
    // Predicate "p̃(2^i) ≤ p̃(1)/2", monotone in i because the target is
    // non-increasing. Points beyond the domain carry no mass, so the
    // predicate holds there without spending a query.
    let mut probe = |i: u32| -> Result<bool> {
        let x = 1u64 << i;
        if x > n {
            return Ok(true);
        }
        let v = match cache.get(&i) {
            Some(&v) => v,
            None => {
                let v = pmf.query(x)?;
                cache.insert(i, v);
                v
            }
        };
        Ok(v <= half)
    };

    // First i in [1, kcap] satisfying the predicate; the loop leaves lo on a
    // probed-true index whenever one exists, and the trailing probe settles
    // the all-false case.
    let kcap = ceil_log2(n);
    let mut lo = 1u32;
    let mut hi = kcap;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if !probe(lo)? {
        // Mass stays above half throughout: the constant envelope is within
        // ratio 4 because more than half the domain carries > p̃(1)/2.
        let segments = vec![Segment::ConstBlock { lo: 1, hi: n, height: p1 }];
        return report(segments, None, pmf.queries() - start);
    }

    let x0 = 1u64 << lo;
    if x0 > n {
        // The predicate only became true past the domain edge; inside the
        // domain the mass never halved.
        let segments = vec![Segment::ConstBlock { lo: 1, hi: n, height: p1 }];
        return report(segments, None, pmf.queries() - start);
    }
    let px0 = cache[&lo];
    let mut segments = vec![Segment::ConstBlock { lo: 1, hi: x0 - 1, height: p1 }];
    if px0 > S::zero() {
        // λ through (1, p̃(1)) and (x0, p̃(x0)); log-concavity puts every
        // later point below this geometric extension. The rate is shaved by a
        // relative 1e−8 so the tail stays above targets whose own stored
        // values carry accumulated rounding (len·ε of log-convexity drift in
        // a long tail); the mass this adds is below a 1e−4 relative factor
        // for any drop a finite float can represent.
        let shave = S::one() - S::from_f64_lossy(1e-8);
        let lambda = (p1 / px0).ln() / S::from_index(x0 - 1) * shave;
        if lambda > S::zero() {
            segments.push(Segment::ExpTail { start: x0, end: n, height: px0, lambda });
        } else {
            // p̃(x0) = p̃(1)/2 exactly at x0 = 2: no decay information beyond
            // "at most half"; fall back to the constant continuation.
            segments.push(Segment::ConstBlock { lo: x0, hi: n, height: px0 });
        }
    } else if x0 <= n {
        segments.push(Segment::ConstBlock { lo: x0, hi: n, height: S::zero() });
    }
    report(segments, Some(x0), pmf.queries() - start)
}

/// Envelope for a tree-monotone target on a complete binary tree: query every
/// vertex to depth ℓ0 (exact singleton segments), then cover each depth-ℓ0
/// vertex's strict descendants with one block at that vertex's mass — a valid
/// ceiling because mass can only shrink along root-to-leaf paths.
pub fn build_tree_monotone<S: Real>(pmf: &QueryCountedPmf<S>) -> Result<BuildReport<S>> {
    build_tree_monotone_with_offset(pmf, TREE_DEPTH_OFFSET)
}

/// [`build_tree_monotone`] with an explicit depth offset c (the exact region
/// deepens, and the ratio bound tightens, as c grows).
pub fn build_tree_monotone_with_offset<S: Real>(
    pmf: &QueryCountedPmf<S>,
    c: u32,
) -> Result<BuildReport<S>> {
    let n = pmf.domain_size();
    let ell = tree_depth_for_len(n)?;
    let l0 = tree_exact_depth(ell, c);
    let start = pmf.queries();

    let exact_count = (1u64 << (l0 + 1)) - 1;
    let mut segments = Vec::with_capacity(exact_count as usize);
    let mut frontier = Vec::new();
    for v in 1..=exact_count {
        let h = pmf.query(v)?;
        segments.push(Segment::ConstBlock { lo: v, hi: v, height: h });
        if l0 < ell && v >= (1u64 << l0) {
            frontier.push((v, h));
        }
    }
    for (v, h) in frontier {
        segments.push(Segment::TreeBlock {
            block_root: v,
            depth_lo: l0,
            depth_hi: ell,
            height: h,
            count: (1u64 << (ell - l0 + 1)) - 2,
        });
    }
    Ok(BuildReport {
        envelope: Envelope::from_segments(segments)?,
        queries_used: pmf.queries() - start,
        class: ClassTag::Tree,
        diagnostics: Diagnostics { exact_depth: Some(l0), ..Diagnostics::default() },
    })
}
