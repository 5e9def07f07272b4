//! `envsamp bandit` — multi-seed bandit runs with aggregated regret curves.
//!
//! Fans one run per seed across a worker pool, recovers each run's
//! pseudo-regret curve from its realized environment, and aggregates
//! mean/std regret per round over seeds (in seed order, so the aggregate is
//! deterministic). The regret table is the reproducible artifact: rerunning
//! with the same flags yields identical bytes. The optional per-round trace
//! carries a wall-clock column and is therefore only opt-in.

use std::path::PathBuf;

use clap::Args;
use envsamp_core::bandit::{
    exp3_run, fast_exp3_run, fast_exp3_run_audited, regret_curve, BanditConfig, BanditRun,
    Environment, StepSchedule,
};
use envsamp_core::stats::mean_std;
use rayon::prelude::*;
use serde_json::json;

use crate::report::{Cell, Failure, Format, OutputSink, Result, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Algo {
    /// Textbook exponential-weights baseline, Θ(K) work per round.
    Exp3,
    /// Rank-space rejection player, polylog(K) work per round.
    Fast,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Exp3 => "exp3",
            Algo::Fast => "fast",
        }
    }
}

#[derive(Args, Debug)]
pub struct BanditArgs {
    /// Player to run.
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Adversary: fixed_partition[:z], changing_cliff[:z[:phases]], or
    /// stochastic_slope.
    #[arg(long, default_value = "fixed_partition")]
    pub env: String,
    /// Number of arms K.
    #[arg(long = "K", default_value_t = 256)]
    pub arms: usize,
    /// Number of rounds T.
    #[arg(long = "T", default_value_t = 20_000)]
    pub horizon: u64,
    /// Step-size schedule: prop, exp, or const:<eta>.
    #[arg(long, default_value = "prop")]
    pub schedule: String,
    /// Proposal draws averaged per loss-estimate update (fast player).
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Number of seeds to fan out.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Base seed; runs use seed, seed+1, ….
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also export the full per-round trace. Its wall_ns column is measured
    /// wall-clock time, so the trace (unlike every other artifact) is not
    /// byte-reproducible across reruns.
    #[arg(long)]
    pub trace: bool,
    /// Track the exact per-round sup p/q (fast player only; adds a Θ(K log K)
    /// scan per round, so keep it off timing-sensitive runs).
    #[arg(long)]
    pub audit: bool,
    /// Directory to write the artifacts and manifest into.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Artifact format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn run(args: &BanditArgs) -> Result<()> {
    let env = Environment::parse(&args.env).map_err(Failure::invalid)?;
    let schedule = StepSchedule::<f64>::parse(&args.schedule).map_err(Failure::invalid)?;
    if args.seeds == 0 {
        return Err(Failure::invalid("need at least one seed"));
    }
    if args.seed.checked_add(args.seeds).is_none() {
        return Err(Failure::invalid("seed range overflows"));
    }
    if args.audit && args.algo == Algo::Exp3 {
        return Err(Failure::invalid("--audit instruments the fast player only"));
    }
    let base = BanditConfig::<f64> {
        arms: args.arms,
        horizon: args.horizon,
        schedule,
        mix_draws: args.m,
        seed: args.seed,
    };
    base.validate().map_err(Failure::invalid)?;

    // One run per seed across the worker pool; a collected parallel range
    // keeps seed order, and the explicit sort pins the aggregation order even
    // if the collection strategy ever changes.
    let runs: Result<Vec<(BanditRun<f64>, Vec<f64>)>> = (0..args.seeds)
        .into_par_iter()
        .map(|i| {
            let config = BanditConfig { seed: args.seed + i, ..base };
            let run = match args.algo {
                Algo::Exp3 => exp3_run(&config, &env),
                Algo::Fast if args.audit => fast_exp3_run_audited(&config, &env),
                Algo::Fast => fast_exp3_run(&config, &env),
            }
            .map_err(Failure::check)?;
            let curve =
                regret_curve(&run, &env, args.arms, args.horizon).map_err(Failure::check)?;
            Ok((run, curve))
        })
        .collect();
    let mut runs = runs?;
    runs.sort_by_key(|(r, _)| r.seed);

    let mut regret = Table::new(&["t", "mean_regret", "std_regret", "n_seeds"]);
    let mut column = vec![0.0f64; runs.len()];
    for ti in 0..args.horizon as usize {
        for (slot, (_, curve)) in column.iter_mut().zip(&runs) {
            *slot = curve[ti];
        }
        let (mean, std) = mean_std(&column);
        regret.push(vec![
            Cell::Int(ti as u64 + 1),
            Cell::Float(mean),
            Cell::Float(std),
            Cell::Int(runs.len() as u64),
        ]);
    }

    let finals: Vec<f64> = runs.iter().map(|(_, c)| *c.last().expect("nonempty curve")).collect();
    let (mean_final, std_final) = mean_std(&finals);
    println!("algo         {}", args.algo.name());
    println!("environment  {env}");
    println!("schedule     {schedule}");
    println!("arms         {}", args.arms);
    println!("horizon      {}", args.horizon);
    println!("mix draws    {}", args.m);
    println!("seeds        {} starting at {}", args.seeds, args.seed);
    println!("final regret {mean_final:.3} ± {std_final:.3}");
    if args.algo == Algo::Fast {
        let kth_per_round = runs.iter().map(|(r, _)| r.kth_total as f64).sum::<f64>()
            / runs.len() as f64
            / args.horizon as f64;
        println!("kth calls    {kth_per_round:.2} per round");
    }
    if let Some(worst) = runs.iter().filter_map(|(r, _)| r.max_p_over_q).reduce(f64::max) {
        println!("sup p/q      {worst:.4} (bound 2)");
    }
    if schedule == StepSchedule::Guaranteed {
        let k = args.arms as f64;
        let bound = 4.0 * (args.horizon as f64 * k * k.ln()).sqrt();
        println!("regret bound {bound:.1} = 4·sqrt(T·K·ln K)");
    }

    let mut sink = OutputSink::new(args.out.clone(), args.format)?;
    sink.write_table("regret", &regret)?;
    if args.trace {
        let mut trace =
            Table::new(&["seed", "t", "arm", "loss", "cum_loss", "kth_calls", "wall_ns"]);
        for (r, _) in &runs {
            for rec in &r.trace {
                trace.push(vec![
                    Cell::Int(r.seed),
                    Cell::Int(rec.t),
                    Cell::Int(rec.arm),
                    Cell::Float(rec.loss),
                    Cell::Float(rec.cum_loss),
                    Cell::Int(rec.kth_calls),
                    Cell::Int(rec.wall_ns),
                ]);
            }
        }
        sink.write_table("trace", &trace)?;
    }
    sink.finish(
        "bandit",
        json!({
            "algo": args.algo.name(),
            "env": env.to_string(),
            "arms": args.arms,
            "horizon": args.horizon,
            "schedule": schedule.to_string(),
            "mix_draws": args.m,
            "seeds": args.seeds,
            "seed": args.seed,
            "trace": args.trace,
            "audit": args.audit,
            "format": args.format.name(),
        }),
    )?;
    Ok(())
}
