//! Build an envelope for a large monotone target from ~20 point queries and
//! draw from it exactly. Mirrors the README walkthrough.

use envsamp_core::builders::{build_for_class, ClassTag};
use envsamp_core::sampler::sample_batch;
use envsamp_core::{zoo, Pmf64, Result};
use rand::SeedableRng;

fn main() -> Result<()> {
    // A monotone target with 2^20 support points, accessed only pointwise.
    let values: Vec<f64> = zoo::gen_monotone(1 << 20, 7);
    let pmf = Pmf64::from_dense(values.clone())?;

    // 21 queries buy an envelope carrying at most twice the target's mass…
    let built = build_for_class(ClassTag::Monotone, &pmf)?;
    assert!(built.queries_used <= 21);
    let audit = zoo::audit_envelope(&built.envelope, &values)?;
    println!("{} queries, mass ratio {:.3}", built.queries_used, audit.ratio);

    // …and rejection against it draws exactly from the normalized target.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let batch = sample_batch(&pmf, &built.envelope, 10_000, &mut rng)?;
    println!("{:.3} trials per draw", batch.mean_trials.unwrap());
    Ok(())
}
