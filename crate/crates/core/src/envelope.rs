//! Piecewise upper envelopes with closed-form mass and inverse-CDF sampling.
//!
//! An [`Envelope`] is a small list of analytic segments describing a
//! dominating density q̃ over a 1-based integer domain (a path `[1, N]` or
//! the heap indices of a complete binary tree):
//!
//! * [`Segment::ConstBlock`] — constant height on an index interval.
//! * [`Segment::ExpTail`] — geometric decay `h · e^(−λ(x − start))` on an
//!   interval; its mass has the closed form `h · (1 − e^(−λn)) / (1 − e^(−λ))`.
//! * [`Segment::TreeBlock`] — constant height on the strict descendants of a
//!   block root, spanning the depth range `(depth_lo, depth_hi]`.
//!
//! Envelopes are immutable after construction. Proposal sampling draws one
//! uniform on (0, 1): the scaled draw selects a segment by binary search over
//! the cumulative masses (a draw landing exactly on a boundary selects the
//! earlier segment), and the leftover fraction positions the sample inside
//! the segment — uniformly for constant and tree blocks, by truncated
//! geometric inversion through logarithms for exponential tails, clamped at
//! segment ends to absorb floating-point edge cases. Zero-mass segments are
//! representable (a cliff's tail) and are never selected.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::util::vertex_depth;

/// One analytic piece of an envelope. All index bounds are inclusive and
/// 1-based; `depth_lo` is exclusive and `depth_hi` inclusive, mirroring the
/// half-open depth span `(depth_lo, depth_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Segment<S> {
    ConstBlock {
        lo: u64,
        hi: u64,
        height: S,
    },
    ExpTail {
        start: u64,
        end: u64,
        /// Height at `start`; the density at x is `height · e^(−λ(x−start))`.
        height: S,
        lambda: S,
    },
    TreeBlock {
        /// Heap index of the block root; covered vertices are its strict
        /// descendants down to `depth_hi`.
        block_root: u64,
        depth_lo: u32,
        depth_hi: u32,
        height: S,
        /// Vertex count of the block: `2^(depth_hi − depth_lo + 1) − 2`.
        count: u64,
    },
}

impl<S: Real> Segment<S> {
    /// Closed-form mass of the segment.
    pub fn mass(&self) -> S {
        match *self {
            Segment::ConstBlock { lo, hi, height } => S::from_index(hi - lo + 1) * height,
            Segment::ExpTail { start, end, height, lambda } => {
                let n = S::from_index(end - start + 1);
                // (1 − e^(−λn)) / (1 − e^(−λ)) via expm1 for small-λ accuracy.
                height * (-lambda * n).exp_m1() / (-lambda).exp_m1()
            }
            Segment::TreeBlock { height, count, .. } => S::from_index(count) * height,
        }
    }

    /// Number of domain points the segment covers.
    pub fn len(&self) -> u64 {
        match *self {
            Segment::ConstBlock { lo, hi, .. } => hi - lo + 1,
            Segment::ExpTail { start, end, .. } => end - start + 1,
            Segment::TreeBlock { count, .. } => count,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidEnvelope(msg));
        match *self {
            Segment::ConstBlock { lo, hi, height } => {
                if lo == 0 || hi < lo {
                    return bad(format!("bad const block range [{lo}, {hi}]"));
                }
                if !height.is_finite() || height < S::zero() {
                    return bad(format!("bad const block height {height}"));
                }
            }
            Segment::ExpTail { start, end, height, lambda } => {
                if start == 0 || end < start {
                    return bad(format!("bad tail range [{start}, {end}]"));
                }
                if !height.is_finite() || height < S::zero() {
                    return bad(format!("bad tail height {height}"));
                }
                if !lambda.is_finite() || lambda <= S::zero() {
                    return bad(format!("tail decay must be positive, got {lambda}"));
                }
            }
            Segment::TreeBlock { block_root, depth_lo, depth_hi, height, count } => {
                if block_root == 0 || vertex_depth(block_root) != depth_lo {
                    return bad(format!("tree block root {block_root} not at depth {depth_lo}"));
                }
                if depth_hi <= depth_lo {
                    return bad(format!("empty depth span ({depth_lo}, {depth_hi}]"));
                }
                let expect = (1u64 << (depth_hi - depth_lo + 1)) - 2;
                if count != expect {
                    return bad(format!("tree block count {count}, expected {expect}"));
                }
                if !height.is_finite() || height < S::zero() {
                    return bad(format!("bad tree block height {height}"));
                }
            }
        }
        Ok(())
    }
}

/// Immutable piecewise envelope with precomputed cumulative masses.
#[derive(Clone, Debug)]
pub struct Envelope<S> {
    segments: Vec<Segment<S>>,
    /// Inclusive prefix sums of segment masses (compensated accumulation).
    cum_mass: Vec<S>,
    total_mass: S,
    /// (lo, hi, segment index) for interval segments, sorted by lo.
    intervals: Vec<(u64, u64, u32)>,
    /// Tree blocks grouped by depth span: (depth_lo, depth_hi, sorted roots).
    tree_groups: Vec<(u32, u32, Vec<(u64, u32)>)>,
}

impl<S: Real> Envelope<S> {
    /// Build an envelope from segments. Interval segments must be pairwise
    /// disjoint and tree-block roots distinct per depth span; total mass must
    /// be positive and finite. Segment order is preserved.
    pub fn from_segments(segments: Vec<Segment<S>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidEnvelope("no segments".into()));
        }
        let mut intervals = Vec::new();
        let mut tree_groups: Vec<(u32, u32, Vec<(u64, u32)>)> = Vec::new();
        for (idx, seg) in segments.iter().enumerate() {
            seg.validate()?;
            let idx = idx as u32;
            match *seg {
                Segment::ConstBlock { lo, hi, .. } => intervals.push((lo, hi, idx)),
                Segment::ExpTail { start, end, .. } => intervals.push((start, end, idx)),
                Segment::TreeBlock { block_root, depth_lo, depth_hi, .. } => {
                    match tree_groups.iter_mut().find(|g| g.0 == depth_lo && g.1 == depth_hi) {
                        Some(g) => g.2.push((block_root, idx)),
                        None => tree_groups.push((depth_lo, depth_hi, vec![(block_root, idx)])),
                    }
                }
            }
        }
        intervals.sort_unstable_by_key(|&(lo, ..)| lo);
        for pair in intervals.windows(2) {
            if pair[1].0 <= pair[0].1 {
                return Err(Error::InvalidEnvelope(format!(
                    "overlapping segments at index {}",
                    pair[1].0
                )));
            }
        }
        for (_, _, roots) in &mut tree_groups {
            roots.sort_unstable_by_key(|&(r, _)| r);
            for pair in roots.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(Error::InvalidEnvelope(format!(
                        "duplicate tree block root {}",
                        pair[0].0
                    )));
                }
            }
        }

        // Compensated running sum keeps the prefix masses faithful even for
        // envelopes with tens of thousands of segments.
        let mut cum_mass = Vec::with_capacity(segments.len());
        let mut sum = S::zero();
        let mut comp = S::zero();
        for seg in &segments {
            let m = seg.mass();
            if !m.is_finite() {
                return Err(Error::InvalidEnvelope(format!("non-finite segment mass {m}")));
            }
            let t = sum + m;
            comp = comp + if sum.abs() >= m.abs() { (sum - t) + m } else { (m - t) + sum };
            sum = t;
            cum_mass.push(sum + comp);
        }
        let total_mass = sum + comp;
        if !(total_mass > S::zero()) || !total_mass.is_finite() {
            return Err(Error::ZeroMass);
        }
        Ok(Self { segments, cum_mass, total_mass, intervals, tree_groups })
    }

    pub fn segments(&self) -> &[Segment<S>] {
        &self.segments
    }

    /// Total envelope mass Z_q.
    pub fn total_mass(&self) -> S {
        self.total_mass
    }

    /// Envelope density q̃(x). An index no segment covers is a contract
    /// violation.
    pub fn density_at(&self, x: u64) -> Result<S> {
        if x == 0 {
            return Err(Error::OutOfDomain { x, n: 0 });
        }
        // Interval segments: binary search on the sorted starts.
        let pos = self.intervals.partition_point(|&(lo, ..)| lo <= x);
        if pos > 0 {
            let (lo, hi, idx) = self.intervals[pos - 1];
            if x >= lo && x <= hi {
                return Ok(match self.segments[idx as usize] {
                    Segment::ConstBlock { height, .. } => height,
                    Segment::ExpTail { start, height, lambda, .. } => {
                        height * (-lambda * S::from_index(x - start)).exp()
                    }
                    Segment::TreeBlock { .. } => unreachable!("interval index"),
                });
            }
        }
        // Tree blocks: the candidate root is the ancestor at depth_lo.
        let d = vertex_depth(x);
        for (depth_lo, depth_hi, roots) in &self.tree_groups {
            if d > *depth_lo && d <= *depth_hi {
                let root = x >> (d - depth_lo);
                if let Ok(i) = roots.binary_search_by_key(&root, |&(r, _)| r) {
                    let idx = roots[i].1;
                    if let Segment::TreeBlock { height, .. } = self.segments[idx as usize] {
                        return Ok(height);
                    }
                }
            }
        }
        Err(Error::OutOfDomain { x, n: 0 })
    }

    /// Deterministic inverse-CDF proposal: maps a single uniform u ∈ (0, 1)
    /// to a domain index distributed with mass proportional to q̃.
    pub fn sample_with_uniform(&self, u: S) -> Result<u64> {
        debug_assert!(u > S::zero() && u < S::one());
        let target = u * self.total_mass;
        // First segment whose inclusive cumulative mass reaches the target;
        // an exact boundary hit selects the earlier segment. Zero-mass
        // segments can never be chosen: their cumulative equals their
        // predecessor's, which already failed the search predicate.
        let mut idx = self.cum_mass.partition_point(|&c| c < target);
        if idx >= self.segments.len() {
            idx = self.segments.len() - 1;
        }
        let before = if idx == 0 { S::zero() } else { self.cum_mass[idx - 1] };
        let seg = &self.segments[idx];
        let mass = seg.mass();
        let mut frac = (target - before) / mass;
        if !(frac > S::zero()) {
            frac = S::zero();
        }
        if frac > S::one() {
            frac = S::one();
        }
        Ok(match *seg {
            Segment::ConstBlock { lo, hi, .. } => {
                let len = hi - lo + 1;
                lo + uniform_offset(frac, len)
            }
            Segment::ExpTail { start, end, lambda, .. } => {
                // Truncated geometric on z = x − start with success parameter
                // 1 − e^(−λ), inverted through logarithms.
                let n = end - start + 1;
                let one_minus_bn = -(-lambda * S::from_index(n)).exp_m1();
                let w = (-frac * one_minus_bn).ln_1p();
                let z = (-w / lambda).floor();
                let z = match z.to_f64() {
                    Some(v) if v >= 0.0 => (v as u64).min(n - 1),
                    _ => 0,
                };
                start + z
            }
            Segment::TreeBlock { block_root, count, .. } => {
                // Uniform over the strict descendants: offset o maps to
                // relative depth ⌊log2(o + 2)⌋ and position o + 2 − 2^d.
                let o = uniform_offset(frac, count);
                let o2 = o + 2;
                let rel_depth = o2.ilog2();
                let pos = o2 - (1u64 << rel_depth);
                (block_root << rel_depth) + pos
            }
        })
    }

    /// Draw a proposal index using one uniform from `rng`.
    pub fn sample_proposal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let u: f64 = rng.sample(Open01);
        self.sample_with_uniform(S::from_f64_lossy(u))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&EnvelopeRepr::from(self)).expect("envelope serializes")
    }

    /// Parse an envelope from its JSON representation, revalidating structure
    /// and recorded masses (1e−9 relative) against the closed forms.
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: EnvelopeRepr<S> = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), detail: e.to_string() })?;
        repr.try_into()
    }
}

fn uniform_offset<S: Real>(frac: S, len: u64) -> u64 {
    let scaled = frac * S::from_index(len);
    match scaled.floor().to_f64() {
        Some(v) if v >= 0.0 => (v as u64).min(len - 1),
        _ => 0,
    }
}

/// Wire format: a flat tagged record per segment plus its mass, so consumers
/// can audit masses without reimplementing the closed forms.
#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
struct SegmentRepr<S> {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    end: Option<u64>,
    height: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    block_root: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth_lo: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth_hi: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<u64>,
    mass: S,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
struct EnvelopeRepr<S> {
    segments: Vec<SegmentRepr<S>>,
    total_mass: S,
}

impl<S: Real> From<&Envelope<S>> for EnvelopeRepr<S> {
    fn from(env: &Envelope<S>) -> Self {
        let segments = env
            .segments
            .iter()
            .map(|seg| {
                let mut repr = SegmentRepr {
                    kind: String::new(),
                    lo: None,
                    hi: None,
                    start: None,
                    end: None,
                    height: S::zero(),
                    lambda: None,
                    block_root: None,
                    depth_lo: None,
                    depth_hi: None,
                    count: None,
                    mass: seg.mass(),
                };
                match *seg {
                    Segment::ConstBlock { lo, hi, height } => {
                        repr.kind = "const".into();
                        repr.lo = Some(lo);
                        repr.hi = Some(hi);
                        repr.height = height;
                    }
                    Segment::ExpTail { start, end, height, lambda } => {
                        repr.kind = "exp".into();
                        repr.start = Some(start);
                        repr.end = Some(end);
                        repr.height = height;
                        repr.lambda = Some(lambda);
                    }
                    Segment::TreeBlock { block_root, depth_lo, depth_hi, height, count } => {
                        repr.kind = "tree".into();
                        repr.block_root = Some(block_root);
                        repr.depth_lo = Some(depth_lo);
                        repr.depth_hi = Some(depth_hi);
                        repr.height = height;
                        repr.count = Some(count);
                    }
                }
                repr
            })
            .collect();
        EnvelopeRepr { segments, total_mass: env.total_mass }
    }
}

impl<S: Real> TryFrom<EnvelopeRepr<S>> for Envelope<S> {
    type Error = Error;

    fn try_from(repr: EnvelopeRepr<S>) -> Result<Self> {
        let missing =
            |k: &str, f: &str| Error::InvalidEnvelope(format!("{k} segment missing field {f}"));
        let mut segments = Vec::with_capacity(repr.segments.len());
        let mut recorded = Vec::with_capacity(repr.segments.len());
        for sr in repr.segments {
            let seg = match sr.kind.as_str() {
                "const" => Segment::ConstBlock {
                    lo: sr.lo.ok_or_else(|| missing("const", "lo"))?,
                    hi: sr.hi.ok_or_else(|| missing("const", "hi"))?,
                    height: sr.height,
                },
                "exp" => Segment::ExpTail {
                    start: sr.start.ok_or_else(|| missing("exp", "start"))?,
                    end: sr.end.ok_or_else(|| missing("exp", "end"))?,
                    height: sr.height,
                    lambda: sr.lambda.ok_or_else(|| missing("exp", "lambda"))?,
                },
                "tree" => Segment::TreeBlock {
                    block_root: sr.block_root.ok_or_else(|| missing("tree", "block_root"))?,
                    depth_lo: sr.depth_lo.ok_or_else(|| missing("tree", "depth_lo"))?,
                    depth_hi: sr.depth_hi.ok_or_else(|| missing("tree", "depth_hi"))?,
                    height: sr.height,
                    count: sr.count.ok_or_else(|| missing("tree", "count"))?,
                },
                other => {
                    return Err(Error::InvalidEnvelope(format!("unknown segment kind {other:?}")))
                }
            };
            recorded.push(sr.mass);
            segments.push(seg);
        }
        let env = Envelope::from_segments(segments)?;
        let tol = S::from_f64_lossy(1e-9);
        for (seg, rec) in env.segments.iter().zip(recorded) {
            let m = seg.mass();
            let scale = m.abs().max(rec.abs()).max(S::min_positive_value());
            if (m - rec).abs() > tol * scale {
                return Err(Error::InvalidEnvelope(format!(
                    "recorded mass {rec} disagrees with closed form {m}"
                )));
            }
        }
        Ok(env)
    }
}
