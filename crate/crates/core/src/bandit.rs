//! Adversarial multi-armed bandit players: a baseline exponential-weights
//! player with `Θ(K)` work per round, and a sublinear player that reaches the
//! same distribution through rejection sampling in `O(log² K)` expected work
//! per round.
//!
//! Both maintain cumulative loss estimates `L` and play
//! `p_t ∝ exp(−η_t·L_t)`. The baseline materializes `p_t` each round. The
//! fast player never does: it keeps `L` in an [`OrderStatMap`], builds a
//! dyadic envelope over *rank space* — the sorted weights
//! `w(r) = exp(−η(L_(r) − L_min))` are non-increasing in the rank `r`, so
//! the monotone construction applies with each rank probe answered by
//! `kth_largest` — and draws the arm by rejection against that envelope. The
//! loss estimate update stays unbiased via importance weights measured
//! against the envelope's proposal density, with an optional `m`-sample
//! average ([`BanditConfig::mix_draws`]) to cut the estimator's variance.

use std::time::Instant;

use rand::distributions::Open01;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builders::{monotone_blocks, Side};
use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::ostree::OrderStatMap;
use crate::scalar::Real;

/// RNG stream carrying every random choice the player makes.
const PLAYER_STREAM: u64 = 0;
/// RNG stream carrying the adversary's randomness, isolated from the player
/// so either side can be replayed alone.
const ENV_STREAM: u64 = 1;

/// Step-size schedule `η_t`; `round` is 1-based and the distribution played
/// at round `t` uses `η` evaluated at that round, i.e. the decaying schedules
/// give `c·√(ln K/(K·t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "eta")]
pub enum StepSchedule<S> {
    /// `½·√(ln K/(K·t))` — the schedule the regret guarantee is stated for.
    Guaranteed,
    /// `√(ln K/(K·t))` — the more aggressive schedule used in experiments.
    Experimental,
    /// Fixed `η > 0`.
    Constant(S),
}

impl<S: Real> StepSchedule<S> {
    pub fn eta(&self, arms: usize, round: u64) -> S {
        debug_assert!(round >= 1);
        let base = || {
            let k = S::from_index(arms as u64);
            (k.ln() / (k * S::from_index(round))).sqrt()
        };
        match self {
            StepSchedule::Guaranteed => base() / (S::one() + S::one()),
            StepSchedule::Experimental => base(),
            StepSchedule::Constant(eta) => *eta,
        }
    }

    /// Parse `"prop"`, `"exp"`, or `"const:<eta>"`.
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "prop" => Ok(StepSchedule::Guaranteed),
            "exp" => Ok(StepSchedule::Experimental),
            _ => match text.strip_prefix("const:") {
                Some(v) => {
                    let eta: f64 = v
                        .parse()
                        .map_err(|_| Error::InvalidParam(format!("unparseable step size {v:?}")))?;
                    if !eta.is_finite() || eta <= 0.0 {
                        return Err(Error::InvalidParam(format!(
                            "constant step size must be positive, got {eta}"
                        )));
                    }
                    Ok(StepSchedule::Constant(S::from_f64_lossy(eta)))
                }
                None => Err(Error::InvalidParam(format!(
                    "unknown schedule {text:?}; expected prop, exp, or const:<eta>"
                ))),
            },
        }
    }
}

impl<S: Real> std::fmt::Display for StepSchedule<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepSchedule::Guaranteed => write!(f, "prop"),
            StepSchedule::Experimental => write!(f, "exp"),
            StepSchedule::Constant(eta) => write!(f, "const:{eta}"),
        }
    }
}

/// Player configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BanditConfig<S> {
    /// Number of arms `K ≥ 2`.
    pub arms: usize,
    /// Horizon `T ≥ 1`.
    pub horizon: u64,
    pub schedule: StepSchedule<S>,
    /// Proposal draws averaged per loss-estimate update, `m ≥ 1`.
    pub mix_draws: usize,
    pub seed: u64,
}

impl<S: Real> BanditConfig<S> {
    pub fn new(arms: usize, horizon: u64) -> Self {
        Self { arms, horizon, schedule: StepSchedule::Guaranteed, mix_draws: 1, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms < 2 {
            return Err(Error::InvalidParam(format!("need at least 2 arms, got {}", self.arms)));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidParam("horizon must be at least 1".into()));
        }
        if self.mix_draws < 1 {
            return Err(Error::InvalidParam("mix_draws must be at least 1".into()));
        }
        if let StepSchedule::Constant(eta) = self.schedule {
            if !eta.is_finite() || eta <= S::zero() {
                return Err(Error::InvalidParam(format!(
                    "constant step size must be positive, got {eta}"
                )));
            }
        }
        Ok(())
    }
}

/// Loss-generating adversary. All kinds emit losses in `[0, 1]` and fix the
/// full loss vector before seeing the player's choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Environment {
    /// A fixed, seeded fraction of arms always return 0; the rest return 1.
    FixedPartition { fraction: f64 },
    /// Like `FixedPartition`, but the zero-arm set is re-drawn at each of
    /// `phases` equally spaced change points.
    ChangingCliff { fraction: f64, phases: u32 },
    /// Arm `k` returns i.i.d. `max(k/K − 0.3·U, 0)` with `U ~ Uniform(0,1)`;
    /// arm 0 always returns 0.
    StochasticSlope,
    /// Deterministic loss table, row `t−1` (cycled) giving round `t`'s
    /// losses.
    Custom { table: Vec<Vec<f64>> },
}

impl Environment {
    /// Parse `"fixed_partition:<z>"`, `"changing_cliff:<z>:<phases>"`
    /// (both parameters optional, defaults 0.2 and 5), or
    /// `"stochastic_slope"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(':');
        let kind = parts.next().unwrap_or("");
        let bad = |detail: String| Error::InvalidParam(detail);
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| bad(format!("unparseable environment parameter {s:?}")))
        };
        let env = match kind {
            "fixed_partition" => {
                let fraction = match parts.next() {
                    Some(s) => num(s)?,
                    None => 0.1,
                };
                Environment::FixedPartition { fraction }
            }
            "changing_cliff" => {
                let fraction = match parts.next() {
                    Some(s) => num(s)?,
                    None => 0.2,
                };
                let phases = match parts.next() {
                    Some(s) => num(s)? as u32,
                    None => 5,
                };
                Environment::ChangingCliff { fraction, phases }
            }
            "stochastic_slope" => Environment::StochasticSlope,
            _ => {
                return Err(bad(format!(
                    "unknown environment {kind:?}; expected fixed_partition, changing_cliff, or stochastic_slope"
                )))
            }
        };
        if parts.next().is_some() {
            return Err(bad(format!("trailing environment parameters in {text:?}")));
        }
        env.validate_params()?;
        Ok(env)
    }

    fn validate_params(&self) -> Result<()> {
        let check_fraction = |z: f64| {
            if z > 0.0 && z <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("zero-arm fraction {z} outside (0, 1]")))
            }
        };
        match self {
            Environment::FixedPartition { fraction } => check_fraction(*fraction),
            Environment::ChangingCliff { fraction, phases } => {
                check_fraction(*fraction)?;
                if *phases < 1 {
                    return Err(Error::InvalidParam("need at least one phase".into()));
                }
                Ok(())
            }
            Environment::StochasticSlope => Ok(()),
            Environment::Custom { table } => {
                if table.is_empty() || table[0].is_empty() {
                    return Err(Error::InvalidParam("empty loss table".into()));
                }
                let width = table[0].len();
                for (r, row) in table.iter().enumerate() {
                    if row.len() != width {
                        return Err(Error::InvalidParam(format!(
                            "ragged loss table: row {} has {} arms, row 0 has {width}",
                            r + 1,
                            row.len()
                        )));
                    }
                    for (arm, &v) in row.iter().enumerate() {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(Error::LossOutOfRange {
                                t: r as u64 + 1,
                                arm: arm as u64,
                                value: v,
                            });
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

impl std::fmt::Display for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Environment::FixedPartition { fraction } => write!(f, "fixed_partition:{fraction}"),
            Environment::ChangingCliff { fraction, phases } => {
                write!(f, "changing_cliff:{fraction}:{phases}")
            }
            Environment::StochasticSlope => write!(f, "stochastic_slope"),
            Environment::Custom { table } => {
                write!(f, "custom[{}x{}]", table.len(), table[0].len())
            }
        }
    }
}

/// A realized adversary for one run: zero-arm sets drawn, loss stream ready.
/// Rebuilding with the same `(environment, arms, horizon, seed)` replays the
/// identical loss process, which is how regret accounting recovers the
/// expected-loss curves after a run.
#[derive(Clone, Debug)]
pub struct LossProcess {
    arms: usize,
    horizon: u64,
    rng: ChaCha8Rng,
    kind: ProcessKind,
    /// Round the next `losses` call must ask for; random kinds advance one
    /// round per call.
    next_t: u64,
    /// Per-arm expected loss per round, one row per regime (a single row for
    /// stationary kinds).
    expected: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

#[derive(Clone, Debug)]
enum ProcessKind {
    Static { losses: Vec<f64> },
    Phased { phase_losses: Vec<Vec<f64>>, phases: u32 },
    Slope,
    Table { table: Vec<Vec<f64>> },
}

impl LossProcess {
    pub fn new(env: &Environment, arms: usize, horizon: u64, seed: u64) -> Result<Self> {
        env.validate_params()?;
        if arms < 2 {
            return Err(Error::InvalidParam(format!("need at least 2 arms, got {arms}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ENV_STREAM);
        let (kind, expected) = match env {
            Environment::FixedPartition { fraction } => {
                let losses = partition_losses(arms, *fraction, &mut rng);
                (ProcessKind::Static { losses: losses.clone() }, vec![losses])
            }
            Environment::ChangingCliff { fraction, phases } => {
                let phase_losses: Vec<Vec<f64>> =
                    (0..*phases).map(|_| partition_losses(arms, *fraction, &mut rng)).collect();
                (
                    ProcessKind::Phased { phase_losses: phase_losses.clone(), phases: *phases },
                    phase_losses,
                )
            }
            Environment::StochasticSlope => {
                let expected: Vec<f64> = (0..arms)
                    .map(|k| {
                        let a = k as f64 / arms as f64;
                        if a >= 0.3 {
                            a - 0.15
                        } else {
                            a * a / 0.6
                        }
                    })
                    .collect();
                (ProcessKind::Slope, vec![expected])
            }
            Environment::Custom { table } => {
                if table[0].len() != arms {
                    return Err(Error::InvalidParam(format!(
                        "loss table has {} arms but the run has {arms}",
                        table[0].len()
                    )));
                }
                (ProcessKind::Table { table: table.clone() }, table.clone())
            }
        };
        Ok(Self { arms, horizon, rng, kind, next_t: 1, expected, scratch: vec![0.0; arms] })
    }

    /// The loss vector the adversary commits to at round `t` (1-based).
    /// Rounds must be visited in order, exactly once each — the random kinds
    /// advance their stream per call.
    pub fn losses(&mut self, t: u64) -> Result<&[f64]> {
        if t != self.next_t || t > self.horizon {
            return Err(Error::InvalidParam(format!(
                "loss stream is sequential: asked for round {t}, expected {}",
                self.next_t
            )));
        }
        self.next_t += 1;
        match &self.kind {
            ProcessKind::Static { losses } => Ok(losses),
            ProcessKind::Phased { phase_losses, phases } => {
                Ok(&phase_losses[phase_index(t, self.horizon, *phases)])
            }
            ProcessKind::Slope => {
                for k in 0..self.arms {
                    let u: f64 = self.rng.sample(Open01);
                    self.scratch[k] = (k as f64 / self.arms as f64 - 0.3 * u).max(0.0);
                }
                Ok(&self.scratch)
            }
            ProcessKind::Table { table } => Ok(&table[(t - 1) as usize % table.len()]),
        }
    }

    /// Per-arm expected loss at round `t`; defined for every round regardless
    /// of the stream position.
    pub fn expected_losses(&self, t: u64) -> &[f64] {
        match &self.kind {
            ProcessKind::Static { .. } | ProcessKind::Slope => &self.expected[0],
            ProcessKind::Phased { phases, .. } => {
                &self.expected[phase_index(t, self.horizon, *phases)]
            }
            ProcessKind::Table { table } => &self.expected[(t - 1) as usize % table.len()],
        }
    }

    /// `min_k Σ_{s ≤ t} E[ℓ_s(k)]` for every `t = 1..horizon` — the
    /// comparator term of pseudo-regret as a curve.
    pub fn best_arm_curve(&self) -> Vec<f64> {
        let mut cum = vec![0.0f64; self.arms];
        let mut out = Vec::with_capacity(self.horizon as usize);
        for t in 1..=self.horizon {
            let row = self.expected_losses(t);
            let mut best = f64::INFINITY;
            for (c, &e) in cum.iter_mut().zip(row) {
                *c += e;
                best = best.min(*c);
            }
            out.push(best);
        }
        out
    }

    /// The best fixed arm's expected cumulative loss over the full horizon.
    pub fn best_arm_cumulative(&self) -> f64 {
        self.best_arm_curve().pop().unwrap_or(0.0)
    }
}

/// Phase containing round `t` (0-based); phases split `[1, horizon]` into
/// equal spans, changes taking effect on the round after each boundary.
fn phase_index(t: u64, horizon: u64, phases: u32) -> usize {
    (((t - 1) * phases as u64) / horizon).min(phases as u64 - 1) as usize
}

/// Ones with a seeded choice of `max(1, round(fraction·K))` zero arms.
fn partition_losses(arms: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let zeros = ((fraction * arms as f64).round() as usize).clamp(1, arms);
    let mut ids: Vec<usize> = (0..arms).collect();
    for i in 0..zeros {
        let j = rng.gen_range(i..arms);
        ids.swap(i, j);
    }
    let mut losses = vec![1.0; arms];
    for &i in &ids[..zeros] {
        losses[i] = 0.0;
    }
    losses
}

/// One round of a run, as exported in traces.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RoundRecord {
    pub t: u64,
    pub arm: u64,
    pub loss: f64,
    pub cum_loss: f64,
    /// Order-statistic lookups this round (0 for the baseline player).
    pub kth_calls: u64,
    pub wall_ns: u64,
}

/// A completed run: final loss estimates, the per-round trace, and audit
/// aggregates.
#[derive(Clone, Debug)]
pub struct BanditRun<S> {
    pub seed: u64,
    /// Final cumulative loss estimates `L_T`, coordinatewise non-decreasing
    /// over the run since losses are nonnegative.
    pub loss_estimates: Vec<S>,
    pub trace: Vec<RoundRecord>,
    /// Incurred loss `Σ_t ℓ_t(I_t)`.
    pub total_loss: f64,
    /// Total order-statistic lookups across the run.
    pub kth_total: u64,
    /// Largest per-round `‖p/q‖∞` seen; only populated by audited runs.
    pub max_p_over_q: Option<f64>,
}

/// Baseline exponential-weights player; `Θ(K)` work per round.
pub fn exp3_run<S: Real>(config: &BanditConfig<S>, env: &Environment) -> Result<BanditRun<S>> {
    config.validate()?;
    let k = config.arms;
    let mut process = LossProcess::new(env, k, config.horizon, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(PLAYER_STREAM);

    let mut l = vec![S::zero(); k];
    let mut weights = vec![S::zero(); k];
    let mut trace = Vec::with_capacity(config.horizon as usize);
    let mut cum = 0.0f64;
    for t in 1..=config.horizon {
        let tick = Instant::now();
        let eta = config.schedule.eta(k, t);
        let l_min = l.iter().copied().fold(S::infinity(), S::min);
        let mut z = S::zero();
        for (w, &li) in weights.iter_mut().zip(&l) {
            *w = ((l_min - li) * eta).exp();
            z += *w;
        }
        let target = S::from_f64_lossy(rng.sample(Open01)) * z;
        let mut acc = S::zero();
        let mut chosen = k - 1;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if target <= acc {
                chosen = i;
                break;
            }
        }
        let loss = ingest_loss(process.losses(t)?, chosen, t)?;
        // Importance-weighted update: e_{I}·ℓ/p(I), with p(I) = w(I)/Z.
        l[chosen] += S::from_f64_lossy(loss) * z / weights[chosen];
        cum += loss;
        trace.push(RoundRecord {
            t,
            arm: chosen as u64,
            loss,
            cum_loss: cum,
            kth_calls: 0,
            wall_ns: tick.elapsed().as_nanos() as u64,
        });
    }
    Ok(BanditRun {
        seed: config.seed,
        loss_estimates: l,
        trace,
        total_loss: cum,
        kth_total: 0,
        max_p_over_q: None,
    })
}

fn ingest_loss(losses: &[f64], arm: usize, t: u64) -> Result<f64> {
    let v = losses[arm];
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::LossOutOfRange { t, arm: arm as u64, value: v })
    }
}

/// The fast player's per-round proposal: a dyadic envelope over rank space.
/// Rank `r = 1` carries the smallest loss estimate, hence the largest weight
/// `w(r) = exp(−η(L_(r) − L_min))`; the sequence is non-increasing in `r`,
/// so the monotone construction dominates it with mass ratio at most 2.
#[derive(Clone, Debug)]
pub struct RankProposal<S> {
    pub envelope: Envelope<S>,
    pub eta: S,
    pub l_min: S,
}

/// Build the round's proposal from the current order statistics. Costs one
/// `kth_largest` call for `L_min` plus one per dyadic rank probe —
/// `⌈log2 K⌉ + 2` calls in total, each `O(log K)`.
pub fn build_rank_proposal<S: Real>(map: &OrderStatMap<S>, eta: S) -> Result<RankProposal<S>> {
    let k = map.len();
    if k == 0 {
        return Err(Error::InvalidParam("empty loss-estimate map".into()));
    }
    let (l_min, _) = map.kth_largest(k)?;
    let mut weight_at = |r: u64| -> Result<S> {
        let (lv, _) = map.kth_largest(k + 1 - r as usize)?;
        Ok(((l_min - lv) * eta).exp())
    };
    let segments = monotone_blocks(&mut weight_at, 1, k as u64, Side::Right)?;
    Ok(RankProposal { envelope: Envelope::from_segments(segments)?, eta, l_min })
}

impl<S: Real> RankProposal<S> {
    /// Weight and arm at rank `r`; one `kth_largest` call.
    pub fn rank_lookup(&self, map: &OrderStatMap<S>, r: u64) -> Result<(S, u64)> {
        let k = map.len() as u64;
        let (lv, arm) = map.kth_largest((k + 1 - r) as usize)?;
        Ok((((self.l_min - lv) * self.eta).exp(), arm))
    }

    /// Rejection-sample an arm from `softmax(−η·L)`; each trial costs one
    /// `kth_largest` call and trials are geometric with mean `Z_q/Z_p ≤ 2`.
    /// Returns `(arm, p̃(arm), trials)`.
    pub fn sample_arm<R: Rng + ?Sized>(
        &self,
        map: &OrderStatMap<S>,
        rng: &mut R,
    ) -> Result<(u64, S, u64)> {
        let tol = S::one() + S::from_f64_lossy(1e-12);
        let mut trials = 0u64;
        loop {
            trials += 1;
            let r = self.envelope.sample_proposal(rng)?;
            let (w, arm) = self.rank_lookup(map, r)?;
            let q = self.envelope.density_at(r)?;
            if w > q * tol + S::min_positive_value() {
                return Err(Error::DominanceViolation {
                    x: r,
                    envelope: q.to_f64_lossy(),
                    target: w.to_f64_lossy(),
                });
            }
            let u: S = S::from_f64_lossy(rng.sample(Open01));
            if u <= w / q {
                return Ok((arm, w, trials));
            }
        }
    }

    /// `p̃(J)/q(J)` for a proposal rank draw `J = r`, with `q` the normalized
    /// proposal density `q̃(r)/Z_q`; one `kth_largest` call.
    pub fn importance_ratio(&self, map: &OrderStatMap<S>, r: u64) -> Result<S> {
        let (w, _) = self.rank_lookup(map, r)?;
        let q = self.envelope.density_at(r)?;
        Ok(w * self.envelope.total_mass() / q)
    }
}

/// The loss-estimate increment for the chosen arm:
/// `loss · (1/m)·Σ_i p̃(J_i)/q(J_i) / p̃(I_t)`, with `J_i` given as rank draws
/// from the proposal. The full update vector is this value at coordinate
/// `I_t` and zero elsewhere; conditional on the state it averages to the true
/// loss vector, and the `m`-sample mean shrinks its variance as `1/m`.
pub fn estimate_increment<S: Real>(
    proposal: &RankProposal<S>,
    map: &OrderStatMap<S>,
    chosen_weight: S,
    loss: S,
    j_ranks: &[u64],
) -> Result<S> {
    if j_ranks.is_empty() {
        return Err(Error::InvalidParam("need at least one proposal draw".into()));
    }
    let mut acc = S::zero();
    for &r in j_ranks {
        acc += proposal.importance_ratio(map, r)?;
    }
    Ok(loss * acc / (S::from_index(j_ranks.len() as u64) * chosen_weight))
}

/// Sublinear player; `O(log² K)` expected order-statistic work per round.
pub fn fast_exp3_run<S: Real>(config: &BanditConfig<S>, env: &Environment) -> Result<BanditRun<S>> {
    fast_exp3_impl(config, env, false)
}

/// As [`fast_exp3_run`], additionally scanning all `K` arms every round to
/// record the exact `‖p/q‖∞` in [`BanditRun::max_p_over_q`]. The scan is
/// `Θ(K log K)` per round, so keep audited runs off the benchmarking path.
pub fn fast_exp3_run_audited<S: Real>(
    config: &BanditConfig<S>,
    env: &Environment,
) -> Result<BanditRun<S>> {
    fast_exp3_impl(config, env, true)
}

fn fast_exp3_impl<S: Real>(
    config: &BanditConfig<S>,
    env: &Environment,
    audit: bool,
) -> Result<BanditRun<S>> {
    config.validate()?;
    let k = config.arms;
    let mut process = LossProcess::new(env, k, config.horizon, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(PLAYER_STREAM);

    let mut l = vec![S::zero(); k];
    let mut map = OrderStatMap::build(&l)?;
    let mut trace = Vec::with_capacity(config.horizon as usize);
    let mut cum = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut j_ranks = vec![0u64; config.mix_draws];
    for t in 1..=config.horizon {
        let tick = Instant::now();
        let kth_before = map.kth_calls();
        let eta = config.schedule.eta(k, t);
        let proposal = build_rank_proposal(&map, eta)?;
        if audit {
            max_ratio = max_ratio.max(sup_p_over_q(&l, &proposal));
        }
        let (arm, chosen_weight, _trials) = proposal.sample_arm(&map, &mut rng)?;
        let loss = ingest_loss(process.losses(t)?, arm as usize, t)?;
        for r in j_ranks.iter_mut() {
            *r = proposal.envelope.sample_proposal(&mut rng)?;
        }
        let inc =
            estimate_increment(&proposal, &map, chosen_weight, S::from_f64_lossy(loss), &j_ranks)?;
        let old = l[arm as usize];
        map.update(arm, old, old + inc)?;
        l[arm as usize] = old + inc;
        cum += loss;
        trace.push(RoundRecord {
            t,
            arm,
            loss,
            cum_loss: cum,
            kth_calls: map.kth_calls() - kth_before,
            wall_ns: tick.elapsed().as_nanos() as u64,
        });
    }
    Ok(BanditRun {
        seed: config.seed,
        loss_estimates: l,
        trace,
        total_loss: cum,
        kth_total: map.kth_calls(),
        max_p_over_q: audit.then_some(max_ratio),
    })
}

/// Exact `‖p/q‖∞` for the round's state by full scan: `p ∝ w(r)`,
/// `q = q̃(r)/Z_q` over ranks.
fn sup_p_over_q<S: Real>(l: &[S], proposal: &RankProposal<S>) -> f64 {
    let mut sorted: Vec<S> = l.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite loss estimates"));
    let mut z_p = S::zero();
    let mut worst = S::zero();
    for (pos, &lv) in sorted.iter().enumerate() {
        let r = pos as u64 + 1;
        let w = ((proposal.l_min - lv) * proposal.eta).exp();
        let q = proposal.envelope.density_at(r).expect("rank in envelope domain");
        z_p += w;
        worst = worst.max(w / q);
    }
    (worst * proposal.envelope.total_mass() / z_p).to_f64_lossy()
}

/// Pseudo-regret of one run: incurred cumulative loss minus the best fixed
/// arm's expected cumulative loss under the run's realized environment.
pub fn pseudo_regret<S: Real>(
    run: &BanditRun<S>,
    env: &Environment,
    arms: usize,
    horizon: u64,
) -> Result<f64> {
    let process = LossProcess::new(env, arms, horizon, run.seed)?;
    Ok(run.total_loss - process.best_arm_cumulative())
}

/// Per-round pseudo-regret curve for one run, length `horizon`.
pub fn regret_curve<S: Real>(
    run: &BanditRun<S>,
    env: &Environment,
    arms: usize,
    horizon: u64,
) -> Result<Vec<f64>> {
    let process = LossProcess::new(env, arms, horizon, run.seed)?;
    let best = process.best_arm_curve();
    Ok(run.trace.iter().zip(best).map(|(rec, b)| rec.cum_loss - b).collect())
}
