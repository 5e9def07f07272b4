//! Instance generators, membership validators, and dense ground truth.
//!
//! Everything here takes full O(N) access to the target — the opposite end of
//! the spectrum from the query model the builders live in. Generators produce
//! seeded members of each shape class; validators certify membership by
//! exhaustive scan and report the first offending index; the audit helpers
//! compute exact masses, mass ratios, and pointwise dominance for judging
//! envelopes. Production sampling paths never call into this module: it
//! exists so tests and the verification CLI can compare the query-frugal
//! constructions against brute force.

use std::io::Write as _;
use std::path::Path;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builders::ClassTag;
use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::util::vertex_depth;

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// I.i.d. weights from (0, 1] sorted into non-increasing order.
pub fn gen_monotone<S: Real>(n: u64, seed: u64) -> Vec<S> {
    assert!(n >= 1, "empty domain");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(Open01)).collect();
    v.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite draws"));
    v.into_iter().map(S::from_f64_lossy).collect()
}

/// The heavy-tailed reference target `p̃(x) = 1/x`.
pub fn gen_harmonic<S: Real>(n: u64) -> Vec<S> {
    assert!(n >= 1, "empty domain");
    (1..=n).map(|x| S::one() / S::from_index(x)).collect()
}

/// Uniform mass on the prefix `[1, n0]`, zero after.
pub fn gen_cliff<S: Real>(n: u64, n0: u64) -> Result<Vec<S>> {
    assert!(n >= 1, "empty domain");
    if n0 == 0 || n0 > n {
        return Err(Error::InvalidParam(format!("cliff edge {n0} outside [1, {n}]")));
    }
    Ok((1..=n).map(|x| if x <= n0 { S::one() } else { S::zero() }).collect())
}

/// Geometric decay `p̃(x) = ρ^(x−1)`. Built by cumulative products so the
/// sequence is non-increasing in floating point as well as on paper.
pub fn gen_geometric<S: Real>(n: u64, rho: f64) -> Result<Vec<S>> {
    assert!(n >= 1, "empty domain");
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParam(format!("decay {rho} outside (0, 1)")));
    }
    let mut v = Vec::with_capacity(n as usize);
    let mut cur = 1.0f64;
    for _ in 0..n {
        v.push(S::from_f64_lossy(cur));
        cur *= rho;
    }
    Ok(v)
}

/// Log-concave target with mode at 1: `p̃ = exp(−V)` for a random convex
/// piecewise-linear increasing potential V with V(1) = 0. The total drop is
/// log-uniform over roughly [0.1, 250] — from near-flat to steep but safely
/// above underflow (so the validator's products stay in normal range).
pub fn gen_logconcave<S: Real>(n: u64, seed: u64) -> Vec<S> {
    assert!(n >= 1, "empty domain");
    if n == 1 {
        return vec![S::one()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_drop = 10f64.powf(rng.gen_range(-1.0..2.4));
    let steps = (n - 1) as usize;
    let pieces = rng.gen_range(1..=4usize).min(steps);
    let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| rng.gen_range(1..steps)).collect();
    cuts.sort_unstable();
    cuts.push(steps);
    let mut slopes: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.1..1.0)).collect();
    slopes.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite slopes"));

    // Per-step potential increments, convex because slopes ascend.
    let mut incr = Vec::with_capacity(steps);
    let mut begin = 0usize;
    for (piece, &end) in cuts.iter().enumerate() {
        for _ in begin..end {
            incr.push(slopes[piece]);
        }
        begin = end;
    }
    let raw: f64 = incr.iter().sum();
    let scale = total_drop / raw;

    let mut out = Vec::with_capacity(n as usize);
    let mut v = 0.0f64;
    out.push(S::one());
    for d in incr {
        v += d * scale;
        out.push(S::from_f64_lossy((-v).exp()));
    }
    out
}

/// Strictly unimodal target: a random mode, with strictly rising and falling
/// flanks built from per-step log drops. Drops are bounded below far above
/// machine precision, so strictness survives rounding.
pub fn gen_unimodal<S: Real>(n: u64, seed: u64) -> Vec<S> {
    assert!(n >= 1, "empty domain");
    if n == 1 {
        return vec![S::one()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = rng.gen_range(1..=n);
    let mut out = vec![0.0f64; n as usize];
    out[(mode - 1) as usize] = 1.0;
    let mut fill_side = |count: u64, stride: i64, rng: &mut ChaCha8Rng| {
        if count == 0 {
            return;
        }
        let total_drop = rng.gen_range(1.0..25.0);
        let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(0.1..1.0)).collect();
        let scale = total_drop / raw.iter().sum::<f64>();
        let mut v = 0.0f64;
        for (j, d) in raw.iter().enumerate() {
            v += d * scale;
            let idx = (mode as i64 - 1) + stride * (j as i64 + 1);
            out[idx as usize] = (-v).exp();
        }
    };
    fill_side(mode - 1, -1, &mut rng);
    fill_side(n - mode, 1, &mut rng);
    out.into_iter().map(S::from_f64_lossy).collect()
}

/// Tree-monotone target on a complete binary tree of depth ℓ, in heap order:
/// the root has mass 1 and each vertex passes a uniformly drawn fraction of
/// its mass to its children (capped at 99% so the parent inequality holds
/// with slack even after floating-point rounding).
pub fn gen_tree<S: Real>(ell: u32, seed: u64) -> Vec<S> {
    assert!(ell <= 30, "tree too deep to materialize");
    let len = (1u64 << (ell + 1)) - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = vec![0.0f64; len as usize];
    vals[0] = 1.0;
    for v in 1..=(len / 2) {
        let parent = vals[(v - 1) as usize];
        let total = rng.gen_range(0.0..0.99) * parent;
        let f: f64 = rng.gen();
        vals[(2 * v - 1) as usize] = f * total;
        vals[2 * v as usize] = total - f * total;
    }
    vals.into_iter().map(S::from_f64_lossy).collect()
}

// ---------------------------------------------------------------------------
// Validators
// ---------------------------------------------------------------------------

/// First 1-based index that rises above its predecessor; `None` when
/// non-increasing.
pub fn is_monotone<S: Real>(p: &[S]) -> Option<u64> {
    assert!(!p.is_empty(), "empty target");
    p.windows(2).position(|w| w[0] < w[1]).map(|i| i as u64 + 2)
}

/// First 1-based index at which strict rise-then-fall breaks (a tie counts
/// as a break); `None` for a strictly unimodal target.
pub fn is_strictly_unimodal<S: Real>(p: &[S]) -> Option<u64> {
    assert!(!p.is_empty(), "empty target");
    let n = p.len();
    let mut x = 0usize;
    while x + 1 < n && p[x] < p[x + 1] {
        x += 1;
    }
    for y in x..n.saturating_sub(1) {
        if !(p[y] > p[y + 1]) {
            return Some(y as u64 + 2);
        }
    }
    None
}

/// First 1-based index violating discrete log-concavity with mode at 1:
/// the maximum must sit at index 1, the support must be a prefix (no mass
/// after a zero), and `p(x)² ≥ p(x−1)·p(x+1)` must hold up to a 1e−12
/// relative slack that absorbs rounding in exact-tie constructions.
pub fn is_logconcave<S: Real>(p: &[S]) -> Option<u64> {
    assert!(!p.is_empty(), "empty target");
    let p1 = p[0];
    let mut support_ended = false;
    for (i, &v) in p.iter().enumerate() {
        if v > p1 {
            return Some(i as u64 + 1);
        }
        if support_ended && v > S::zero() {
            return Some(i as u64 + 1);
        }
        if v == S::zero() {
            support_ended = true;
        }
    }
    let slack = S::one() - S::from_f64_lossy(1e-12);
    for x in 1..p.len().saturating_sub(1) {
        if p[x] * p[x] < p[x - 1] * p[x + 1] * slack {
            return Some(x as u64 + 1);
        }
    }
    None
}

/// First 1-based heap index (of a parent) whose mass is exceeded by its
/// children's sum; `None` when tree-monotone. The slice length must be
/// `2^(depth+1) − 1`.
pub fn is_tree_monotone<S: Real>(p: &[S]) -> Option<u64> {
    let n = p.len() as u64;
    assert!(n >= 1 && (n + 1).is_power_of_two(), "not a complete-tree array");
    for v in 1..=(n / 2) {
        let children = p[(2 * v - 1) as usize] + p[2 * v as usize];
        if p[(v - 1) as usize] < children {
            return Some(v);
        }
    }
    None
}

/// Validator for `class`, as a function of the dense array.
pub fn validator_for(class: ClassTag) -> fn(&[f64]) -> Option<u64> {
    match class {
        ClassTag::Monotone => is_monotone::<f64>,
        ClassTag::Unimodal => is_strictly_unimodal::<f64>,
        ClassTag::LogConcave => is_logconcave::<f64>,
        ClassTag::Tree => is_tree_monotone::<f64>,
    }
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

fn kadd<S: Real>(sum: &mut S, comp: &mut S, term: S) {
    let t = *sum + term;
    *comp = *comp + if sum.abs() >= term.abs() { (*sum - t) + term } else { (term - t) + *sum };
    *sum = t;
}

/// Exact total mass by compensated summation.
pub fn exact_mass<S: Real>(p: &[S]) -> Result<S> {
    let mut sum = S::zero();
    let mut comp = S::zero();
    for &v in p {
        kadd(&mut sum, &mut comp, v);
    }
    let total = sum + comp;
    if total > S::zero() && total.is_finite() {
        Ok(total)
    } else {
        Err(Error::ZeroMass)
    }
}

/// Everything a full scan can say about an envelope against its dense target.
#[derive(Clone, Copy, Debug)]
pub struct EnvelopeAudit<S> {
    /// Z_p by compensated summation.
    pub target_mass: S,
    /// Z_q by compensated summation of `density_at` over the whole domain.
    pub envelope_mass: S,
    /// Z_q / Z_p — the expected number of proposal draws per accepted sample.
    pub ratio: S,
    /// `max_x p(x)/q(x)` over normalized densities (infinite if the envelope
    /// is zero somewhere the target is not).
    pub sup_ratio: S,
    /// First index where `p̃ > q̃·(1 + 1e−12)`, if dominance fails.
    pub first_violation: Option<u64>,
}

/// Scan the full domain once, collecting masses, the density-ratio supremum,
/// and the first dominance violation. Violations use the same tolerance the
/// rejection loop enforces per draw: 1e−12 relative, plus an absolute floor
/// at the smallest normal value — below that, floating-point quanta make
/// relative comparisons meaningless.
pub fn audit_envelope<S: Real>(env: &Envelope<S>, p: &[S]) -> Result<EnvelopeAudit<S>> {
    let tol = S::one() + S::from_f64_lossy(1e-12);
    let mut zp = S::zero();
    let mut zp_c = S::zero();
    let mut zq = S::zero();
    let mut zq_c = S::zero();
    let mut sup = S::zero();
    let mut first_violation = None;
    for (i, &pv) in p.iter().enumerate() {
        let x = i as u64 + 1;
        let qv = env.density_at(x)?;
        kadd(&mut zp, &mut zp_c, pv);
        kadd(&mut zq, &mut zq_c, qv);
        if pv > qv * tol + S::min_positive_value() && first_violation.is_none() {
            first_violation = Some(x);
        }
        if pv > S::zero() {
            sup = if qv > S::zero() { sup.max(pv / qv) } else { S::infinity() };
        }
    }
    let target_mass = zp + zp_c;
    if !(target_mass > S::zero()) || !target_mass.is_finite() {
        return Err(Error::ZeroMass);
    }
    let envelope_mass = zq + zq_c;
    let ratio = envelope_mass / target_mass;
    Ok(EnvelopeAudit { target_mass, envelope_mass, ratio, sup_ratio: sup * ratio, first_violation })
}

/// Z_q / Z_p by full scan.
pub fn exact_ratio<S: Real>(env: &Envelope<S>, p: &[S]) -> Result<S> {
    Ok(audit_envelope(env, p)?.ratio)
}

/// `max_x p(x)/q(x)` over normalized densities, by full scan.
pub fn sup_density_ratio<S: Real>(env: &Envelope<S>, p: &[S]) -> Result<S> {
    Ok(audit_envelope(env, p)?.sup_ratio)
}

/// First index where the envelope fails to dominate the target beyond the
/// 1e−12 relative tolerance. Panics if the envelope does not cover the
/// domain — a covered domain is the builder's contract.
pub fn dominance_violation<S: Real>(env: &Envelope<S>, p: &[S]) -> Option<u64> {
    audit_envelope(env, p).expect("envelope covers the target domain").first_violation
}

/// Write one value per line in the dense text format the oracle loader reads.
pub fn write_dense_file<S: Real, P: AsRef<Path>>(path: P, values: &[S]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Named fixtures
// ---------------------------------------------------------------------------

/// Small fixed instances with known shapes, used by the statistical sampler
/// suites. Kept light-tailed on purpose: the total-variation budget of those
/// suites needs `Σ √p(x)` small, which flat wide distributions violate.
pub mod fixtures {
    use super::*;

    #[derive(Clone, Debug)]
    pub struct Fixture {
        pub name: &'static str,
        pub class: ClassTag,
        /// Dense values; heap order for [`ClassTag::Tree`].
        pub values: Vec<f64>,
    }

    fn two_sided(n: u64, mode: u64, base: f64) -> Vec<f64> {
        (1..=n).map(|x| base.powi((x as i64 - mode as i64).unsigned_abs() as i32)).collect()
    }

    fn level_decay(ell: u32, base: f64) -> Vec<f64> {
        (1..(1u64 << (ell + 1))).map(|v| base.powi(vertex_depth(v) as i32)).collect()
    }

    /// Twenty fixtures spanning all four shape classes.
    pub fn sampler_fixtures() -> Vec<Fixture> {
        let fx = |name, class, values| Fixture { name, class, values };
        vec![
            fx("harmonic-8", ClassTag::Monotone, gen_harmonic(8)),
            fx("geometric-64-half", ClassTag::Monotone, gen_geometric(64, 0.5).unwrap()),
            fx("geometric-32-third", ClassTag::Monotone, gen_geometric(32, 0.3).unwrap()),
            fx(
                "cubic-decay-256",
                ClassTag::Monotone,
                (1..=256u64).map(|x| 1.0 / (x * x * x) as f64).collect(),
            ),
            fx("cliff-16-4", ClassTag::Monotone, gen_cliff(16, 4).unwrap()),
            fx("staircase-4", ClassTag::Monotone, vec![8.0, 4.0, 2.0, 1.0]),
            fx("pyramid-7", ClassTag::Unimodal, vec![1.0, 2.0, 4.0, 8.0, 4.0, 2.0, 1.0]),
            fx("peak-center-33", ClassTag::Unimodal, two_sided(33, 17, 0.25)),
            fx("peak-left-16", ClassTag::Unimodal, two_sided(16, 4, 0.25)),
            fx("ramp-5", ClassTag::Unimodal, vec![1.0, 2.0, 4.0, 8.0, 16.0]),
            fx("fall-6", ClassTag::Unimodal, vec![32.0, 16.0, 8.0, 4.0, 2.0, 1.0]),
            fx("geometric-128-half", ClassTag::LogConcave, gen_geometric(128, 0.5).unwrap()),
            fx(
                "gauss-32",
                ClassTag::LogConcave,
                (1..=32u64).map(|x| (-0.4 * ((x - 1) as f64).powi(2)).exp()).collect(),
            ),
            fx("cliff-20-6", ClassTag::LogConcave, gen_cliff(20, 6).unwrap()),
            fx("uniform-4", ClassTag::LogConcave, gen_cliff(4, 4).unwrap()),
            fx("geometric-24-gentle", ClassTag::LogConcave, gen_geometric(24, 0.45).unwrap()),
            fx("tree-even-3", ClassTag::Tree, level_decay(3, 0.125)),
            fx("tree-skew-2", ClassTag::Tree, vec![1.0, 0.5, 0.125, 0.3, 0.1, 0.06, 0.01]),
            fx("tree-sharp-4", ClassTag::Tree, level_decay(4, 0.0625)),
            fx("tree-seeded-3", ClassTag::Tree, gen_tree(3, 77)),
        ]
    }
}
