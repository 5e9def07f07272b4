//! Exact sampling from expensive-to-query discrete distributions.
//!
//! The crate is built around one idea: when an unnormalized mass function p̃
//! on `[N]` (or on a complete binary tree) is known to have shape — monotone,
//! unimodal, log-concave with its mode at 1, or tree-monotone — a dominating
//! piecewise envelope q̃ ≥ p̃ with comparable total mass can be assembled from
//! polylogarithmically many point evaluations. Rejection sampling against that
//! envelope then produces draws whose law is *exactly* the normalized target,
//! at a geometric number of trials with mean Z_q/Z_p.
//!
//! The pieces:
//!
//! * [`oracle`] — query-counted access to p̃; every evaluation is metered so
//!   query budgets are measurable facts, not claims.
//! * [`envelope`] — piecewise envelopes (constant blocks, geometric tails,
//!   tree blocks) with closed-form masses and inverse-CDF proposal sampling.
//! * [`builders`] — the shape-aware constructions that turn a few queries
//!   into a dominating envelope with bounded mass ratio.
//! * [`sampler`] — rejection sampling against an envelope, plus the classical
//!   normalized-density variant for comparison.
//! * [`ostree`] — an order-statistic map over (value, index) pairs with
//!   worst-case logarithmic updates and rank queries.
//! * [`bandit`] — adversarial bandits: a textbook multiplicative-weights
//!   baseline and a fast variant that samples arms through a rank-space
//!   envelope in polylogarithmic time per round.
//! * [`zoo`] — seeded instance generators, shape validators, and brute-force
//!   ground truth used by tests and the verification CLI.
//! * [`stats`] — goodness-of-fit and regression helpers shared by tests and
//!   the verification CLI.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the working precision used by the shipped binaries.

pub mod bandit;
pub mod builders;
pub mod envelope;
pub mod error;
pub mod oracle;
pub mod ostree;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod zoo;

mod util;

pub use error::{Error, Result};
pub use scalar::Real;

/// Query-counted mass function at working precision.
pub type Pmf64 = oracle::QueryCountedPmf<f64>;
/// Complete-binary-tree mass function at working precision.
pub type TreePmf64 = oracle::TreePmf<f64>;
/// Piecewise envelope at working precision.
pub type Envelope64 = envelope::Envelope<f64>;
/// Envelope segment at working precision.
pub type Segment64 = envelope::Segment<f64>;
/// Builder output at working precision.
pub type BuildReport64 = builders::BuildReport<f64>;
/// Order-statistic map at working precision.
pub type OrderStatMap64 = ostree::OrderStatMap<f64>;
/// Bandit player configuration at working precision.
pub type BanditConfig64 = bandit::BanditConfig<f64>;
/// Completed bandit run at working precision.
pub type BanditRun64 = bandit::BanditRun<f64>;

/// Reduced-precision variants for callers that trade accuracy for footprint.
pub type Pmf32 = oracle::QueryCountedPmf<f32>;
pub type Envelope32 = envelope::Envelope<f32>;
pub type BuildReport32 = builders::BuildReport<f32>;
pub type OrderStatMap32 = ostree::OrderStatMap<f32>;
