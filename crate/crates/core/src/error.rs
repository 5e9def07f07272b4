//! Crate-wide error type.
//!
//! Contract violations (out-of-range queries, stale order-statistic handles,
//! envelopes that fail to dominate their target) are surfaced as typed errors
//! rather than panics so that callers — the CLI in particular — can map them
//! to exit codes. Numeric payloads are widened to `f64` for reporting.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Query or lookup at an index outside the 1-based domain.
    #[error("index {x} outside domain [1, {n}]")]
    OutOfDomain { x: u64, n: u64 },

    /// A mass function produced a negative, NaN, or infinite value.
    #[error("invalid mass value {value} at index {x}")]
    BadMassValue { x: u64, value: f64 },

    /// A mass function with no positive mass anywhere.
    #[error("mass function is identically zero")]
    ZeroMass,

    /// The promised shape does not hold at the witnessed index.
    #[error("shape precondition violated near index {index}: {detail}")]
    ClassViolation { index: u64, detail: String },

    /// A structurally invalid envelope segment or segment set.
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),

    /// The envelope fell below the target during sampling.
    #[error("envelope {envelope} below target {target} at x = {x}")]
    DominanceViolation { x: u64, envelope: f64, target: f64 },

    /// The scaling constant of a classical rejection sampler is too small.
    #[error("rejection bound too small: acceptance ratio {ratio} at x = {x}")]
    BoundTooSmall { x: u64, ratio: f64 },

    /// Rank outside [1, len] in an order-statistic query.
    #[error("rank {k} outside [1, {len}]")]
    RankOutOfRange { k: u64, len: u64 },

    /// Order-statistic update with a stale or unknown (value, index) handle.
    #[error("no entry (value = {value}, index = {index}) in order-statistic map")]
    StaleEntry { index: u64, value: f64 },

    /// A loss outside [0, 1] reached the bandit update.
    #[error("loss {value} for arm {arm} at round {t} outside [0, 1]")]
    LossOutOfRange { t: u64, arm: u64, value: f64 },

    /// Invalid configuration or constructor argument.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Text-format parse failure, with the 1-based offending line.
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
