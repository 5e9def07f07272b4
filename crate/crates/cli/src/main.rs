//! `envsamp` — experiments and verification for the envelope-sampling
//! library.
//!
//! Subcommands: `envelope` builds and audits one instance, `sweep` measures
//! query counts and mass ratios across domain sizes, `bandit` runs the
//! adversarial players and writes regret curves, `bench` times rounds across
//! arm counts, and `verify` runs end-to-end self-checks with optional fault
//! injection.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 verification failure
//! (a failed check, audit, or planted fault that was detected); 1 is
//! reserved for I/O errors. Seeded commands are bit-reproducible: rerunning
//! with the same flags writes byte-identical artifacts, except columns
//! documented as wall-clock.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod instances;
mod report;

#[derive(Parser, Debug)]
#[command(
    name = "envsamp",
    version,
    about = "Shape-constrained envelope sampling: experiments and verification",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the envelope for one seeded instance and audit it.
    Envelope(commands::envelope::EnvelopeArgs),
    /// Measure query counts and mass ratios across a grid of domain sizes.
    Sweep(commands::sweep::SweepArgs),
    /// Run a bandit player over seeds and write the mean regret curve.
    Bandit(commands::bandit::BanditArgs),
    /// Time player rounds across arm counts on this machine.
    Bench(commands::bench::BenchArgs),
    /// Run the end-to-end self-checks, optionally against a planted fault.
    Verify(commands::verify::VerifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Envelope(args) => commands::envelope::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
        Command::Bandit(args) => commands::bandit::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Verify(args) => commands::verify::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("envsamp: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
