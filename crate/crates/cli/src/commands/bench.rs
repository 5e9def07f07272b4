//! `envsamp bench` — per-round wall time of both players across arm counts.
//!
//! For each K in a power-of-two grid, both players run against a cheap static
//! adversary and their per-round times are read off the run trace. Timing
//! uses the monotonic clock behind each trace entry; a calibration run sizes
//! batches so every batch spans more than a millisecond of work, and the
//! reported figure is the median over a dozen batches, which shrugs off
//! scheduler noise and the allocation-heavy first rounds. Timings are
//! measurements, not seeded draws: the bench table is the one artifact that
//! legitimately differs between reruns.

use std::path::PathBuf;

use clap::Args;
use envsamp_core::bandit::{
    exp3_run, fast_exp3_run, BanditConfig, BanditRun, Environment, StepSchedule,
};
use envsamp_core::stats::fit_line;
use serde_json::json;

use crate::commands::bandit::Algo;
use crate::report::{Cell, Failure, Format, OutputSink, Result, Table};

/// Rounds of the calibration run, which doubles as warmup.
const CALIBRATION_ROUNDS: u64 = 64;
/// Auto-tuned batch width targets this much work per batch (> 1 ms).
const TARGET_BATCH_NS: f64 = 1.2e6;
/// Batches per measurement; the median over them is reported.
const BATCHES: u64 = 12;
/// Cap on rounds per batch so cheap configurations stay quick.
const MAX_BATCH_ROUNDS: u64 = 4096;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Largest arm count; the grid runs 2^10, 2^11, … up to this power of
    /// two.
    #[arg(long = "K", default_value_t = 1 << 18)]
    pub arms: usize,
    /// Seed for the timed runs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory to write the table and manifest into.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Artifact format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn run(args: &BenchArgs) -> Result<()> {
    if !args.arms.is_power_of_two() || args.arms < 1 << 10 {
        return Err(Failure::invalid(format!(
            "--K {} must be a power of two, at least {}",
            args.arms,
            1 << 10
        )));
    }
    let grid: Vec<usize> = (10..=args.arms.ilog2()).map(|p| 1usize << p).collect();

    let mut table = Table::new(&["K", "algo", "ns_per_iter"]);
    let mut exp3_ns = Vec::with_capacity(grid.len());
    let mut fast_ns = Vec::with_capacity(grid.len());
    for &k in &grid {
        for algo in [Algo::Exp3, Algo::Fast] {
            let ns = measure(algo, k, args.seed)?;
            println!("K = {k:>7}  {:<5} {ns:>12.1} ns/round", algo.name());
            table.push(vec![Cell::Int(k as u64), Cell::Text(algo.name()), Cell::Float(ns)]);
            match algo {
                Algo::Exp3 => exp3_ns.push(ns),
                Algo::Fast => fast_ns.push(ns),
            }
        }
    }

    if grid.len() >= 2 {
        let xs: Vec<f64> = grid.iter().map(|&k| (k as f64).ln()).collect();
        let lns = |v: &[f64]| v.iter().map(|&y| y.ln()).collect::<Vec<f64>>();
        let (slope_e, _) = fit_line(&xs, &lns(&exp3_ns));
        let (slope_f, _) = fit_line(&xs, &lns(&fast_ns));
        println!("log-log slope  exp3 {slope_e:.3}   fast {slope_f:.3}");
    }
    let crossover = grid.iter().zip(exp3_ns.iter().zip(&fast_ns)).find(|(_, (e, f))| f < e);
    match crossover {
        Some((&k, _)) => println!("fast player overtakes the baseline at K = {k} on this machine"),
        None => println!(
            "baseline stayed faster through K = {} on this machine",
            grid.last().expect("nonempty grid")
        ),
    }

    let mut sink = OutputSink::new(args.out.clone(), args.format)?;
    sink.write_table("bench", &table)?;
    sink.finish(
        "bench",
        json!({
            "K": args.arms,
            "seed": args.seed,
            "grid": grid,
            "format": args.format.name(),
        }),
    )?;
    Ok(())
}

/// Median per-round nanoseconds for one player at one arm count.
fn measure(algo: Algo, arms: usize, seed: u64) -> Result<f64> {
    let env = Environment::FixedPartition { fraction: 0.1 };
    let run_for = |horizon: u64| -> Result<BanditRun<f64>> {
        let config = BanditConfig::<f64> {
            arms,
            horizon,
            schedule: StepSchedule::Experimental,
            mix_draws: 1,
            seed,
        };
        match algo {
            Algo::Exp3 => exp3_run(&config, &env),
            Algo::Fast => fast_exp3_run(&config, &env),
        }
        .map_err(Failure::check)
    };

    let probe = run_for(CALIBRATION_ROUNDS)?;
    let probe_ns: u64 = probe.trace.iter().map(|r| r.wall_ns).sum();
    let mean_ns = (probe_ns as f64 / CALIBRATION_ROUNDS as f64).max(1.0);
    let width = ((TARGET_BATCH_NS / mean_ns).ceil() as u64).clamp(1, MAX_BATCH_ROUNDS);

    let run = run_for(width * BATCHES)?;
    let mut batch_means: Vec<f64> = run
        .trace
        .chunks_exact(width as usize)
        .map(|chunk| chunk.iter().map(|r| r.wall_ns).sum::<u64>() as f64 / width as f64)
        .collect();
    batch_means.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let n = batch_means.len();
    Ok(if n % 2 == 1 {
        batch_means[n / 2]
    } else {
        0.5 * (batch_means[n / 2 - 1] + batch_means[n / 2])
    })
}
