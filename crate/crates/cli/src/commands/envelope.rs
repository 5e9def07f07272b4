//! `envsamp envelope` — build one envelope and judge it.
//!
//! Generates a seeded instance of the requested class, validates membership,
//! builds the class's envelope under the query meter, and audits the result
//! against the dense target: query budget, mass ratio, density-ratio
//! supremum, pointwise dominance. The verdict drives the exit code — a
//! missed contract is a verification failure (exit 3).

use std::path::PathBuf;

use clap::Args;
use envsamp_core::builders::{build_for_class, query_budget, ClassTag};
use envsamp_core::oracle::QueryCountedPmf;
use envsamp_core::zoo;
use serde_json::json;

use crate::instances::{
    dense_instance, parse_class, ratio_bound, resolve_domain, tree_depth, BOUND_SLACK,
};
use crate::report::{Failure, Format, OutputSink, Result};

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    /// Shape class of the target: monotone, unimodal, logconcave, or tree.
    #[arg(long, value_parser = parse_class)]
    pub class: ClassTag,
    /// Domain size for the flat classes.
    #[arg(long = "N")]
    pub n: Option<u64>,
    /// Tree depth ℓ for the tree class (2^(ℓ+1) − 1 vertices).
    #[arg(long)]
    pub depth: Option<u32>,
    /// Instance seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory to write the JSON report and manifest into.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EnvelopeArgs) -> Result<()> {
    let len = resolve_domain(args.class, args.n, args.depth)?;
    let values = dense_instance(args.class, len, args.seed);
    if let Some(x) = (zoo::validator_for(args.class))(&values) {
        return Err(Failure::invalid(format!(
            "instance fails its {} validator at index {x}",
            args.class
        )));
    }

    let pmf = QueryCountedPmf::from_dense(values.clone()).map_err(Failure::invalid)?;
    let report = build_for_class(args.class, &pmf).map_err(Failure::check)?;
    let audit = zoo::audit_envelope(&report.envelope, &values).map_err(Failure::check)?;

    let budget = query_budget(args.class, len);
    let bound = ratio_bound(args.class, len);
    let tol = 1.0 + BOUND_SLACK;
    let dominance_ok = audit.first_violation.is_none();
    // The tree construction's query count is an exact formula; the others
    // promise only an upper bound.
    let queries_ok = match args.class {
        ClassTag::Tree => report.queries_used == budget,
        _ => report.queries_used <= budget,
    };
    let ratio_ok = audit.ratio <= bound * tol && audit.sup_ratio <= bound * tol;
    let pass = dominance_ok && queries_ok && ratio_ok;

    println!("class        {}", report.class);
    match args.class {
        ClassTag::Tree => println!("domain       {len} vertices (depth {})", tree_depth(len)),
        _ => println!("domain       {len} points"),
    }
    println!("seed         {}", args.seed);
    let relation = if args.class == ClassTag::Tree { "exact" } else { "budget" };
    println!("queries      {} / {} {relation}", report.queries_used, budget);
    println!("mass ratio   {:.6} (bound {:.6})", audit.ratio, bound);
    println!("sup p/q      {:.6}", audit.sup_ratio);
    if let Some(mode) = report.diagnostics.mode {
        println!("mode         {mode}");
    }
    if let Some(crossover) = report.diagnostics.crossover {
        println!("crossover    {crossover}");
    }
    if let Some(exact) = report.diagnostics.exact_depth {
        println!("exact depth  {exact}");
    }
    match audit.first_violation {
        None => println!("dominance    ok"),
        Some(x) => println!("dominance    VIOLATED at x = {x}"),
    }
    println!("verdict      {}", if pass { "PASS" } else { "FAIL" });

    let mut sink = OutputSink::new(args.out.clone(), Format::Json)?;
    sink.write_json(
        "report.json",
        &json!({
            "class": report.class.to_string(),
            "domain_size": len,
            "seed": args.seed,
            "queries_used": report.queries_used,
            "query_budget": budget,
            "mass_ratio": audit.ratio,
            "sup_density_ratio": audit.sup_ratio,
            "ratio_bound": bound,
            "segments": report.envelope.segments().len(),
            "diagnostics": report.diagnostics,
            "first_violation": audit.first_violation,
            "pass": pass,
        }),
    )?;
    sink.finish(
        "envelope",
        json!({
            "class": report.class.to_string(),
            "N": args.n,
            "depth": args.depth,
            "seed": args.seed,
        }),
    )?;

    if pass {
        Ok(())
    } else {
        Err(Failure::check(format!(
            "envelope for {} on {len} points missed its contract \
             (queries {}/{budget}, ratio {:.6} vs {bound:.6}, dominance {})",
            report.class,
            report.queries_used,
            audit.ratio,
            if dominance_ok { "ok" } else { "violated" },
        )))
    }
}
