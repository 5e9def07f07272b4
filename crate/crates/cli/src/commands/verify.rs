//! `envsamp verify` — end-to-end self-checks with optional fault injection.
//!
//! Five checks exercise the pipeline at smoke scale: envelope dominance and
//! ratio bounds, sampler trial/law statistics, the order-statistic map
//! against a brute-force reference, loss-estimator unbiasedness, and the
//! fast player's audited guarantees. Any failing check prints its witness
//! and the run exits 3.
//!
//! `--inject` plants a deliberate fault — a hidden spike in a "monotone"
//! instance, or an envelope tail that decays twice too fast — and feeds it
//! through the same detectors. A healthy toolchain then *must* exit 3 with
//! the fault as the witness; that is the negative control proving the
//! detectors are live, and an exit 0 under injection means a detector is
//! dead.

use clap::Args;
use envsamp_core::bandit::{
    build_rank_proposal, estimate_increment, fast_exp3_run_audited, pseudo_regret, BanditConfig,
    Environment, StepSchedule,
};
use envsamp_core::builders::{build_for_class, query_budget, ClassTag};
use envsamp_core::envelope::{Envelope, Segment};
use envsamp_core::oracle::QueryCountedPmf;
use envsamp_core::ostree::OrderStatMap;
use envsamp_core::sampler::{rejection_sample, sample_batch};
use envsamp_core::stats::{geometric_gof, tv_distance};
use envsamp_core::zoo::{self, fixtures};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instances::{dense_instance, ratio_bound, BOUND_SLACK};
use crate::report::{Failure, Result};

/// Seeded instances per class in the envelope check.
const ENVELOPE_SEEDS: u64 = 15;
/// Draws per fixture in the sampler check.
const SAMPLER_DRAWS: u64 = 10_000;
/// Relative tolerance on mean trials vs the audited mass ratio.
const TRIALS_REL_TOL: f64 = 0.05;
/// Trial-count goodness-of-fit must clear this p-value.
const GOF_MIN_P: f64 = 1e-4;
/// Total-variation budget for the empirical law per fixture.
const TV_LIMIT: f64 = 0.02;
/// Entries and operations in the order-statistic check.
const MAP_ENTRIES: usize = 512;
const MAP_OPS: u64 = 20_000;
/// States, arms, and draws in the estimator check.
const EST_STATES: u64 = 3;
const EST_ARMS: usize = 16;
const EST_DRAWS: u64 = 50_000;
/// Familywise 3-sigma band over the 48 coordinate comparisons: splitting a
/// two-sided level of 2·(1−Φ(3)) ≈ 0.0027 across 48 coordinates needs
/// |z| ≤ 4.03 per coordinate; 4.2 adds margin. (A bare per-coordinate 3-se
/// cut would flag a perfectly unbiased estimator about 12% of the time.)
const EST_SE_BAND: f64 = 4.2;
/// Arms and rounds of the audited player check.
const PLAYER_ARMS: usize = 64;
const PLAYER_ROUNDS: u64 = 1_500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Inject {
    /// No fault: every check must pass.
    None,
    /// Plant a spike in a claimed-monotone instance, hidden past the probe
    /// points so only the full-domain dominance audit can see it.
    NonMonotone,
    /// Double the decay rate of a geometric-tail envelope so it undercuts
    /// its target; the audit and the sampler's runtime check must object.
    BadLambda,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Plant a fault the checks must detect (a detected plant exits 3).
    #[arg(long, value_enum, default_value = "none")]
    pub inject: Inject,
    /// Base seed for every check.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

impl Check {
    fn ok(name: &'static str, detail: String) -> Self {
        Check { name, passed: true, detail }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        Check { name, passed: false, detail }
    }
}

pub fn run(args: &VerifyArgs) -> Result<()> {
    let checks = [
        check_envelopes(args),
        check_sampler(args),
        check_order_stats(args),
        check_estimator(args),
        check_player(args),
    ];
    let mut all = true;
    for c in &checks {
        println!("check {:<22} {}  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail);
        all &= c.passed;
    }
    if all {
        println!("verify: PASS");
        Ok(())
    } else {
        println!("verify: FAIL");
        Err(Failure::check("one or more checks failed"))
    }
}

// ---------------------------------------------------------------------------
// Check 1: envelope dominance, budgets, ratio bounds
// ---------------------------------------------------------------------------

fn check_envelopes(args: &VerifyArgs) -> Check {
    let name = "envelope-dominance";
    let specs: [(ClassTag, u64); 4] = [
        (ClassTag::Monotone, 4096),
        (ClassTag::Unimodal, 4096),
        (ClassTag::LogConcave, 4096),
        (ClassTag::Tree, (1 << 9) - 1),
    ];
    let mut worst_rel = 0.0f64;
    let mut instances = 0u64;
    for (class, len) in specs {
        for s in args.seed..args.seed + ENVELOPE_SEEDS {
            let values = dense_instance(class, len, s);
            match judge_envelope(class, len, values, &format!("{class} seed {s}")) {
                Ok(rel) => worst_rel = worst_rel.max(rel),
                Err(detail) => return Check::fail(name, detail),
            }
            instances += 1;
        }
    }
    if args.inject == Inject::NonMonotone {
        // The spike sits at index 101 — past every dyadic probe point, so the
        // builder cannot see it and only the dominance audit can.
        let mut values = dense_instance(ClassTag::Monotone, 4096, args.seed);
        values[100] = values[0] * 2.0;
        if let Err(detail) =
            judge_envelope(ClassTag::Monotone, 4096, values, "planted non-monotone instance")
        {
            return Check::fail(name, detail);
        }
    }
    Check::ok(name, format!("{instances} instances, worst ratio at {worst_rel:.3} of its bound"))
}

/// Build and audit one instance; `Ok` carries ratio/bound, `Err` the witness.
fn judge_envelope(class: ClassTag, len: u64, values: Vec<f64>, label: &str) -> Result<f64, String> {
    let tol = 1.0 + BOUND_SLACK;
    let fail = |detail: String| format!("{label}: {detail}");
    let pmf = QueryCountedPmf::from_dense(values.clone()).map_err(|e| fail(e.to_string()))?;
    let rep = build_for_class(class, &pmf).map_err(|e| fail(e.to_string()))?;
    let audit = zoo::audit_envelope(&rep.envelope, &values).map_err(|e| fail(e.to_string()))?;
    if let Some(x) = audit.first_violation {
        let q = rep.envelope.density_at(x).map_err(|e| fail(e.to_string()))?;
        return Err(fail(format!(
            "envelope {q:.6e} below target {:.6e} at x = {x}",
            values[(x - 1) as usize]
        )));
    }
    let budget = query_budget(class, len);
    if rep.queries_used > budget {
        return Err(fail(format!("{} queries over the budget {budget}", rep.queries_used)));
    }
    let bound = ratio_bound(class, len);
    if audit.ratio > bound * tol || audit.sup_ratio > bound * tol {
        return Err(fail(format!(
            "ratio {:.6} over the bound {bound:.6}",
            audit.ratio.max(audit.sup_ratio)
        )));
    }
    Ok(audit.ratio / bound)
}

// ---------------------------------------------------------------------------
// Check 2: sampler trial counts and accepted law
// ---------------------------------------------------------------------------

fn check_sampler(args: &VerifyArgs) -> Check {
    let name = "sampler-statistics";
    let wanted = ["harmonic-8", "pyramid-7", "geometric-128-half", "tree-even-3"];
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(11));
    let mut min_p = f64::INFINITY;
    let mut fixtures_run = 0u64;
    for f in fixtures::sampler_fixtures().iter().filter(|f| wanted.contains(&f.name)) {
        let fail = |detail: String| Check::fail(name, format!("{}: {detail}", f.name));
        let pmf = match QueryCountedPmf::from_dense(f.values.clone()) {
            Ok(p) => p,
            Err(e) => return fail(e.to_string()),
        };
        let rep = match build_for_class(f.class, &pmf) {
            Ok(r) => r,
            Err(e) => return fail(e.to_string()),
        };
        let audit = match zoo::audit_envelope(&rep.envelope, &f.values) {
            Ok(a) => a,
            Err(e) => return fail(e.to_string()),
        };
        let batch = match sample_batch(&pmf, &rep.envelope, SAMPLER_DRAWS, &mut rng) {
            Ok(b) => b,
            Err(e) => return fail(e.to_string()),
        };
        let mean = batch.mean_trials.expect("nonempty batch");
        if (mean - audit.ratio).abs() > TRIALS_REL_TOL * audit.ratio {
            return fail(format!(
                "mean trials {mean:.4} far from the mass ratio {:.4}",
                audit.ratio
            ));
        }
        let trials: Vec<u64> = batch.draws.iter().map(|d| d.trials).collect();
        let gof = geometric_gof(&trials, (1.0 / audit.ratio).min(1.0));
        if gof.p_value < GOF_MIN_P {
            return fail(format!("trial counts not geometric (p = {:.2e})", gof.p_value));
        }
        min_p = min_p.min(gof.p_value);
        let z = audit.target_mass;
        let probs: Vec<f64> = f.values.iter().map(|&v| v / z).collect();
        let mut counts = vec![0u64; f.values.len()];
        for d in &batch.draws {
            counts[(d.value - 1) as usize] += 1;
        }
        let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / SAMPLER_DRAWS as f64).collect();
        let tv = tv_distance(&emp, &probs);
        if tv > TV_LIMIT {
            return fail(format!("accepted law drifted from the target (TV = {tv:.4})"));
        }
        fixtures_run += 1;
    }
    if args.inject == Inject::BadLambda {
        if let Err(detail) = sample_against_bad_tail(args) {
            return Check::fail(name, detail);
        }
    }
    Check::ok(
        name,
        format!("{fixtures_run} fixtures x {SAMPLER_DRAWS} draws, min GoF p = {min_p:.3}"),
    )
}

/// Corrupt the geometric fixture's envelope — tail decay doubled — and throw
/// the detectors at it: the full audit and the sampler's per-draw check.
fn sample_against_bad_tail(args: &VerifyArgs) -> Result<(), String> {
    let f = fixtures::sampler_fixtures()
        .into_iter()
        .find(|f| f.name == "geometric-128-half")
        .expect("fixture present");
    let fail = |detail: String| format!("planted fast-decay tail: {detail}");
    let pmf = QueryCountedPmf::from_dense(f.values.clone()).map_err(|e| fail(e.to_string()))?;
    let rep = build_for_class(f.class, &pmf).map_err(|e| fail(e.to_string()))?;
    let segments: Vec<Segment<f64>> = rep
        .envelope
        .segments()
        .iter()
        .cloned()
        .map(|s| match s {
            Segment::ExpTail { start, end, height, lambda } => {
                Segment::ExpTail { start, end, height, lambda: lambda * 2.0 }
            }
            other => other,
        })
        .collect();
    let bad = Envelope::from_segments(segments).map_err(|e| fail(e.to_string()))?;
    let audit = zoo::audit_envelope(&bad, &f.values).map_err(|e| fail(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(12));
    let mut sampler_verdict = String::from("sampler did not propose a violated point");
    for _ in 0..2_000 {
        match rejection_sample(&pmf, &bad, &mut rng) {
            Ok(_) => continue,
            Err(e) => {
                sampler_verdict = format!("sampler refused: {e}");
                break;
            }
        }
    }
    match audit.first_violation {
        Some(x) => Err(fail(format!("audit flags x = {x}; {sampler_verdict}"))),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Check 3: order-statistic map vs a brute-force reference
// ---------------------------------------------------------------------------

/// Sorted-array mirror of the map: ascending (value, index) pairs, linear
/// everything, too simple to be wrong.
struct SortedReference {
    entries: Vec<(f64, u64)>,
}

impl SortedReference {
    fn build(values: &[f64]) -> Self {
        let mut entries: Vec<(f64, u64)> =
            values.iter().enumerate().map(|(i, &v)| (v, i as u64)).collect();
        entries.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Self { entries }
    }

    fn kth_largest(&self, k: usize) -> (f64, u64) {
        self.entries[self.entries.len() - k]
    }

    fn update(&mut self, index: u64, old: f64, new: f64) {
        let at = self
            .entries
            .binary_search_by(|e| e.partial_cmp(&(old, index)).expect("finite values"))
            .expect("entry present");
        self.entries.remove(at);
        let at = self
            .entries
            .binary_search_by(|e| e.partial_cmp(&(new, index)).expect("finite values"))
            .unwrap_err();
        self.entries.insert(at, (new, index));
    }
}

fn check_order_stats(args: &VerifyArgs) -> Check {
    let name = "order-statistics";
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(22));
    let mut live: Vec<f64> = (0..MAP_ENTRIES).map(|_| rng.gen_range(0.0..10.0)).collect();
    let mut map = match OrderStatMap::build(&live) {
        Ok(m) => m,
        Err(e) => return Check::fail(name, e.to_string()),
    };
    let mut reference = SortedReference::build(&live);
    for op in 0..MAP_OPS {
        if rng.gen_bool(0.5) {
            let k = rng.gen_range(1..=MAP_ENTRIES);
            let got = match map.kth_largest(k) {
                Ok(g) => g,
                Err(e) => return Check::fail(name, format!("op {op}: {e}")),
            };
            let want = reference.kth_largest(k);
            if got != want {
                return Check::fail(
                    name,
                    format!("op {op}: rank {k} gave {got:?}, reference says {want:?}"),
                );
            }
        } else {
            let i = rng.gen_range(0..MAP_ENTRIES);
            let new = rng.gen_range(0.0..10.0);
            if let Err(e) = map.update(i as u64, live[i], new) {
                return Check::fail(name, format!("op {op}: {e}"));
            }
            reference.update(i as u64, live[i], new);
            live[i] = new;
        }
    }
    Check::ok(name, format!("{MAP_OPS} ops on {MAP_ENTRIES} entries match the reference"))
}

// ---------------------------------------------------------------------------
// Check 4: loss-estimator unbiasedness
// ---------------------------------------------------------------------------

fn check_estimator(args: &VerifyArgs) -> Check {
    let name = "estimator-unbiasedness";
    let mut worst_z = 0.0f64;
    for state in 0..EST_STATES {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(33 + state));
        let l: Vec<f64> = (0..EST_ARMS).map(|_| rng.gen_range(0.0..3.0)).collect();
        let losses: Vec<f64> = (0..EST_ARMS).map(|_| rng.gen_range(0.0..1.0)).collect();
        let eta = rng.gen_range(0.1..0.5);
        let fail = |detail: String| Check::fail(name, format!("state {state}: {detail}"));
        let map = match OrderStatMap::build(&l) {
            Ok(m) => m,
            Err(e) => return fail(e.to_string()),
        };
        let proposal = match build_rank_proposal(&map, eta) {
            Ok(p) => p,
            Err(e) => return fail(e.to_string()),
        };
        let mut sums = vec![0.0f64; EST_ARMS];
        let mut sumsqs = vec![0.0f64; EST_ARMS];
        for _ in 0..EST_DRAWS {
            let (arm, weight, _) = match proposal.sample_arm(&map, &mut rng) {
                Ok(a) => a,
                Err(e) => return fail(e.to_string()),
            };
            let j = match proposal.envelope.sample_proposal(&mut rng) {
                Ok(j) => j,
                Err(e) => return fail(e.to_string()),
            };
            let inc = match estimate_increment(&proposal, &map, weight, losses[arm as usize], &[j])
            {
                Ok(i) => i,
                Err(e) => return fail(e.to_string()),
            };
            sums[arm as usize] += inc;
            sumsqs[arm as usize] += inc * inc;
        }
        // The loss-estimate update is `inc` at the chosen arm and zero
        // elsewhere; per coordinate its mean over draws must match that
        // arm's loss.
        let n = EST_DRAWS as f64;
        for k in 0..EST_ARMS {
            let mean = sums[k] / n;
            let var = (sumsqs[k] / n - mean * mean).max(0.0) * n / (n - 1.0);
            let se = (var / n).sqrt();
            let err = (mean - losses[k]).abs();
            if err > EST_SE_BAND * se + 1e-12 {
                return fail(format!(
                    "arm {k}: mean {mean:.5} vs loss {:.5} ({:.1} se away)",
                    losses[k],
                    err / se
                ));
            }
            if se > 0.0 {
                worst_z = worst_z.max(err / se);
            }
        }
    }
    Check::ok(
        name,
        format!(
            "{} coordinates within {EST_SE_BAND} se (worst {worst_z:.2})",
            EST_STATES as usize * EST_ARMS
        ),
    )
}

// ---------------------------------------------------------------------------
// Check 5: audited fast player
// ---------------------------------------------------------------------------

fn check_player(args: &VerifyArgs) -> Check {
    let name = "player-guarantees";
    let env = Environment::FixedPartition { fraction: 0.1 };
    let config = BanditConfig::<f64> {
        arms: PLAYER_ARMS,
        horizon: PLAYER_ROUNDS,
        schedule: StepSchedule::Guaranteed,
        mix_draws: 1,
        seed: args.seed.wrapping_add(44),
    };
    let run = match fast_exp3_run_audited(&config, &env) {
        Ok(r) => r,
        Err(e) => return Check::fail(name, e.to_string()),
    };
    let ratio = run.max_p_over_q.expect("audited run records the ratio");
    if ratio > 2.0 * (1.0 + BOUND_SLACK) {
        return Check::fail(name, format!("sup p/q hit {ratio:.6}, above the proved 2"));
    }
    let regret = match pseudo_regret(&run, &env, PLAYER_ARMS, PLAYER_ROUNDS) {
        Ok(r) => r,
        Err(e) => return Check::fail(name, e.to_string()),
    };
    let k = PLAYER_ARMS as f64;
    let bound = 4.0 * (PLAYER_ROUNDS as f64 * k * k.ln()).sqrt();
    if regret > bound {
        return Check::fail(name, format!("regret {regret:.1} above the bound {bound:.1}"));
    }
    Check::ok(name, format!("sup p/q {ratio:.3} <= 2, regret {regret:.1} <= {bound:.1}"))
}
