//! Rejection sampling against an envelope.
//!
//! The central loop: propose `X ~ q̃/Z_q` from the envelope, query `p̃(X)`
//! once, and accept with probability `p̃(X)/q̃(X)`. Accepted values follow the
//! normalized target *exactly* — the unknown normalization constant cancels
//! in the acceptance ratio — and the trial count is geometric with mean
//! `Z_q/Z_p`, so a mass ratio of 2 costs two queries per sample on average.
//!
//! [`ClassicalRejection`] is the textbook variant for fully known densities,
//! where a claimed bound `M ≥ max p/q` replaces the envelope; it exists as a
//! baseline and to make the contrast concrete (it needs normalized densities
//! up front, which is exactly what the envelope path avoids).

use rand::distributions::Open01;
use rand::Rng;

use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::oracle::QueryCountedPmf;
use crate::scalar::Real;

/// One accepted sample and the number of proposals it took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DrawResult {
    pub value: u64,
    /// Proposal draws until acceptance (including the accepting one); ≥ 1.
    pub trials: u64,
}

/// Aggregate view of a batch of draws.
#[derive(Clone, Debug)]
pub struct BatchSummary {
    pub draws: Vec<DrawResult>,
    /// Mean trials per accepted sample; absent for an empty batch.
    pub mean_trials: Option<f64>,
    /// Total oracle queries spent — one per trial.
    pub query_total: u64,
}

/// Relative slack for the runtime dominance check: `p̃(x) > q̃(x)·(1 + SLACK)`
/// aborts the draw. The slack absorbs envelope heights that equal the target
/// only up to rounding (a geometric tail reproducing a geometric target). The
/// check also grants an absolute floor of one smallest-normal value, because
/// relative comparisons carry no information in the subnormal range.
const DOMINANCE_SLACK: f64 = 1e-12;

/// Draw one exact sample from the normalized target by rejection against a
/// dominating envelope. Each trial costs exactly one oracle query.
pub fn rejection_sample<S: Real, R: Rng + ?Sized>(
    pmf: &QueryCountedPmf<S>,
    env: &Envelope<S>,
    rng: &mut R,
) -> Result<DrawResult> {
    let tol = S::one() + S::from_f64_lossy(DOMINANCE_SLACK);
    let mut trials = 0u64;
    loop {
        trials += 1;
        let x = env.sample_proposal(rng)?;
        let px = pmf.query(x)?;
        let qx = env.density_at(x)?;
        if px > qx * tol + S::min_positive_value() {
            return Err(Error::DominanceViolation {
                x,
                envelope: qx.to_f64_lossy(),
                target: px.to_f64_lossy(),
            });
        }
        // Zero-mass points are never proposed, so qx > 0 here; u lies in the
        // open interval, so a zero-mass target point can never be accepted.
        let u: S = S::from_f64_lossy(rng.sample(Open01));
        if u <= px / qx {
            return Ok(DrawResult { value: x, trials });
        }
    }
}

/// `n` independent draws plus summary statistics.
pub fn sample_batch<S: Real, R: Rng + ?Sized>(
    pmf: &QueryCountedPmf<S>,
    env: &Envelope<S>,
    n: u64,
    rng: &mut R,
) -> Result<BatchSummary> {
    let mut draws = Vec::with_capacity(n as usize);
    let mut query_total = 0u64;
    for _ in 0..n {
        let d = rejection_sample(pmf, env, rng)?;
        query_total += d.trials;
        draws.push(d);
    }
    let mean_trials =
        (n > 0).then(|| draws.iter().map(|d| d.trials as f64).sum::<f64>() / n as f64);
    Ok(BatchSummary { draws, mean_trials, query_total })
}

/// Textbook rejection sampler for fully known, dense target and proposal
/// densities with a caller-claimed ratio bound `M ≥ max_x p(x)/q(x)`
/// (densities are normalized internally, so inputs may be unnormalized).
#[derive(Clone, Debug)]
pub struct ClassicalRejection<S> {
    target: Vec<S>,
    proposal: Vec<S>,
    /// Inclusive cumulative proposal masses, for inverse-CDF draws.
    cum: Vec<S>,
    bound: S,
}

impl<S: Real> ClassicalRejection<S> {
    pub fn new(target: &[S], proposal: &[S], bound: S) -> Result<Self> {
        if target.len() != proposal.len() || target.is_empty() {
            return Err(Error::InvalidParam(format!(
                "mismatched densities: {} target vs {} proposal points",
                target.len(),
                proposal.len()
            )));
        }
        if !bound.is_finite() || bound < S::one() {
            return Err(Error::InvalidParam(format!("ratio bound {bound} must be ≥ 1")));
        }
        let check = |vals: &[S]| -> Result<S> {
            let mut z = S::zero();
            for (i, &v) in vals.iter().enumerate() {
                if !v.is_finite() || v < S::zero() {
                    return Err(Error::BadMassValue { x: i as u64 + 1, value: v.to_f64_lossy() });
                }
                z += v;
            }
            if z > S::zero() {
                Ok(z)
            } else {
                Err(Error::ZeroMass)
            }
        };
        let zt = check(target)?;
        let zq = check(proposal)?;
        let target: Vec<S> = target.iter().map(|&v| v / zt).collect();
        let proposal: Vec<S> = proposal.iter().map(|&v| v / zq).collect();
        let mut cum = Vec::with_capacity(proposal.len());
        let mut acc = S::zero();
        for &v in &proposal {
            acc += v;
            cum.push(acc);
        }
        Ok(Self { target, proposal, cum, bound })
    }

    /// One draw; trials are geometric with success probability `1/M` when the
    /// bound is tight. A proposal point where `p(x) > M·q(x)` invalidates the
    /// claimed bound and aborts.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DrawResult> {
        let tol = S::one() + S::from_f64_lossy(DOMINANCE_SLACK);
        let total = *self.cum.last().expect("nonempty");
        let mut trials = 0u64;
        loop {
            trials += 1;
            let u: S = S::from_f64_lossy(rng.sample(Open01));
            let target_mass = u * total;
            let mut idx = self.cum.partition_point(|&c| c < target_mass);
            if idx >= self.proposal.len() {
                idx = self.proposal.len() - 1;
            }
            let p = self.target[idx];
            let q = self.proposal[idx];
            // q = 0 points carry no proposal mass and are never drawn.
            let ratio = p / q;
            if ratio > self.bound * tol {
                return Err(Error::BoundTooSmall {
                    x: idx as u64 + 1,
                    ratio: ratio.to_f64_lossy(),
                });
            }
            let accept = ratio / self.bound;
            let u2: S = S::from_f64_lossy(rng.sample(Open01));
            if u2 <= accept {
                return Ok(DrawResult { value: idx as u64 + 1, trials });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_monotone;
    use crate::stats::{chi2_gof, geometric_gof, tv_distance};
    use crate::zoo;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn staircase() -> (QueryCountedPmf<f64>, Envelope<f64>) {
        let p = vec![8.0, 4.0, 2.0, 1.0];
        let pmf = QueryCountedPmf::from_dense(p).unwrap();
        let env = build_monotone(&pmf).unwrap().envelope;
        pmf.reset_queries();
        (pmf, env)
    }

    #[test]
    fn exact_envelope_always_accepts() {
        let p = vec![0.3f64; 8];
        let pmf = QueryCountedPmf::from_dense(p).unwrap();
        let env = build_monotone(&pmf).unwrap().envelope;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let d = rejection_sample(&pmf, &env, &mut rng).unwrap();
            assert_eq!(d.trials, 1);
        }
    }

    #[test]
    fn one_query_per_trial() {
        let (pmf, env) = staircase();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch = sample_batch(&pmf, &env, 5_000, &mut rng).unwrap();
        let trial_sum: u64 = batch.draws.iter().map(|d| d.trials).sum();
        assert_eq!(batch.query_total, trial_sum);
        assert_eq!(pmf.queries(), trial_sum);
    }

    #[test]
    fn mean_trials_tracks_mass_ratio() {
        let (pmf, env) = staircase();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch = sample_batch(&pmf, &env, 100_000, &mut rng).unwrap();
        let mean = batch.mean_trials.unwrap();
        assert!((mean - 1.6).abs() < 0.02 * 1.6, "mean trials {mean}");
    }

    #[test]
    fn trials_are_geometric() {
        let (pmf, env) = staircase();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = sample_batch(&pmf, &env, 100_000, &mut rng).unwrap();
        let trials: Vec<u64> = batch.draws.iter().map(|d| d.trials).collect();
        let gof = geometric_gof(&trials, 1.0 / 1.6);
        assert!(gof.p_value > 1e-3, "p = {}", gof.p_value);
    }

    #[test]
    fn accepted_law_is_the_normalized_target() {
        let (pmf, env) = staircase();
        let probs = [8.0 / 15.0, 4.0 / 15.0, 2.0 / 15.0, 1.0 / 15.0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000u64;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            let d = rejection_sample(&pmf, &env, &mut rng).unwrap();
            counts[(d.value - 1) as usize] += 1;
        }
        let gof = chi2_gof(&counts, &probs);
        assert!(gof.p_value > 1e-3, "chi-square p = {}", gof.p_value);
        let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        assert!(tv_distance(&emp, &probs) < 0.005);
    }

    #[test]
    fn dominance_violation_is_reported() {
        // A flat "envelope" that undercuts the target at x = 3.
        let p = vec![1.0, 1.0, 2.0, 1.0];
        let pmf = QueryCountedPmf::from_dense(p).unwrap();
        let env = Envelope::from_segments(vec![crate::envelope::Segment::ConstBlock {
            lo: 1,
            hi: 4,
            height: 1.0,
        }])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut saw_violation = false;
        for _ in 0..200 {
            match rejection_sample(&pmf, &env, &mut rng) {
                Err(Error::DominanceViolation { x, envelope, target }) => {
                    assert_eq!(x, 3);
                    assert_eq!((envelope, target), (1.0, 2.0));
                    saw_violation = true;
                    break;
                }
                Ok(_) => continue,
                Err(other) => panic!("unexpected error {other}"),
            }
        }
        assert!(saw_violation, "x = 3 was never proposed in 200 draws");
    }

    #[test]
    fn empty_batch_has_no_mean() {
        let (pmf, env) = staircase();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let batch = sample_batch(&pmf, &env, 0, &mut rng).unwrap();
        assert!(batch.draws.is_empty());
        assert_eq!(batch.mean_trials, None);
        assert_eq!(batch.query_total, 0);
    }

    #[test]
    fn classical_identical_densities_accept_immediately() {
        let p = [0.25f64, 0.25, 0.25, 0.25];
        let s = ClassicalRejection::new(&p, &p, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = [0u64; 4];
        for _ in 0..40_000 {
            let d = s.draw(&mut rng).unwrap();
            assert_eq!(d.trials, 1);
            counts[(d.value - 1) as usize] += 1;
        }
        let gof = chi2_gof(&counts, &[0.25; 4]);
        assert!(gof.p_value > 1e-3, "p = {}", gof.p_value);
    }

    #[test]
    fn classical_tight_bound_frozen_mean() {
        let s = ClassicalRejection::new(&[0.5f64, 0.5], &[0.25f64, 0.75], 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let total: u64 = (0..n).map(|_| s.draw(&mut rng).unwrap().trials).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean trials {mean}");
    }

    #[test]
    fn classical_law_is_exact() {
        let s = ClassicalRejection::new(&[0.5f64, 0.5], &[0.25f64, 0.75], 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 100_000u64;
        let mut counts = [0u64; 2];
        for _ in 0..n {
            counts[(s.draw(&mut rng).unwrap().value - 1) as usize] += 1;
        }
        let gof = chi2_gof(&counts, &[0.5, 0.5]);
        assert!(gof.p_value > 1e-3, "p = {}", gof.p_value);
    }

    #[test]
    fn classical_detects_understated_bound() {
        let s = ClassicalRejection::new(&[0.9f64, 0.1], &[0.5f64, 0.5], 1.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut saw = false;
        for _ in 0..100 {
            if let Err(Error::BoundTooSmall { x, ratio }) = s.draw(&mut rng) {
                assert_eq!(x, 1);
                assert_relative_eq!(ratio, 1.8, max_relative = 1e-12);
                saw = true;
                break;
            }
        }
        assert!(saw);
    }

    #[test]
    fn classical_rejects_bad_config() {
        assert!(ClassicalRejection::new(&[0.5f64], &[0.5, 0.5], 1.0).is_err());
        assert!(ClassicalRejection::new(&[0.5f64, 0.5], &[0.5, 0.5], 0.5).is_err());
        assert!(ClassicalRejection::new(&[0.0f64, 0.0], &[0.5, 0.5], 1.0).is_err());
        assert!(ClassicalRejection::<f64>::new(&[-1.0, 2.0], &[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn works_for_unimodal_and_tree_shapes() {
        // Smoke check across envelope kinds: exact law within loose TV.
        let fixtures = zoo::fixtures::sampler_fixtures();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for f in fixtures.iter().filter(|f| matches!(f.name, "pyramid-7" | "tree-skew-2")) {
            let pmf = QueryCountedPmf::from_dense(f.values.clone()).unwrap();
            let rep = match f.class {
                crate::builders::ClassTag::Unimodal => crate::builders::build_unimodal(&pmf),
                crate::builders::ClassTag::Tree => crate::builders::build_tree_monotone(&pmf),
                _ => unreachable!(),
            }
            .unwrap();
            let z = zoo::exact_mass(&f.values).unwrap();
            let probs: Vec<f64> = f.values.iter().map(|v| v / z).collect();
            let n = 50_000u64;
            let mut counts = vec![0u64; f.values.len()];
            for _ in 0..n {
                let d = rejection_sample(&pmf, &rep.envelope, &mut rng).unwrap();
                counts[(d.value - 1) as usize] += 1;
            }
            let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
            assert!(tv_distance(&emp, &probs) < 0.01, "fixture {} drifted from its law", f.name);
        }
    }
}
