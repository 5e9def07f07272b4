//! Query-counted access to an unnormalized mass function.
//!
//! Everything downstream treats the target p̃ as a black box that can only be
//! evaluated pointwise, and the entire value of the envelope builders is that
//! they get away with very few evaluations. [`QueryCountedPmf`] is that black
//! box: a backend (dense array, callback, or complete binary tree) behind a
//! counter that increments on every evaluation, so query budgets are measured
//! rather than asserted.
//!
//! Indices are 1-based. For tree-shaped targets the index is the heap index
//! of a vertex: the root is 1 and vertex v has children 2v and 2v + 1, so a
//! tree of depth ℓ occupies exactly the indices 1 ..= 2^(ℓ+1) − 1.
//!
//! The counter uses a relaxed atomic: queries from multiple threads are
//! permitted and none are lost, though the contract only requires
//! single-threaded use.

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::util::vertex_depth;

/// Unnormalized mass function on the vertices of a complete binary tree,
/// stored in heap order (`values[0]` is the root, index 1).
#[derive(Clone, Debug)]
pub struct TreePmf<S> {
    depth: u32,
    values: Vec<S>,
}

impl<S: Real> TreePmf<S> {
    /// A tree of depth `depth` holds exactly `2^(depth+1) − 1` values.
    pub fn new(depth: u32, values: Vec<S>) -> Result<Self> {
        let expect = (1u64 << (depth + 1)) - 1;
        if values.len() as u64 != expect {
            return Err(Error::InvalidParam(format!(
                "tree of depth {depth} needs {expect} values, got {}",
                values.len()
            )));
        }
        validate_values(&values)?;
        Ok(Self { depth, values })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn vertex_count(&self) -> u64 {
        self.values.len() as u64
    }

    /// Value at heap index `v` (1-based).
    pub fn value(&self, v: u64) -> Result<S> {
        self.values
            .get((v - 1) as usize)
            .copied()
            .ok_or(Error::OutOfDomain { x: v, n: self.vertex_count() })
    }

    /// Depth of heap index `v`; the root has depth 0.
    pub fn depth_of(v: u64) -> u32 {
        vertex_depth(v)
    }
}

enum Backend<S> {
    Dense(Vec<S>),
    Callback { n: u64, f: Box<dyn Fn(u64) -> S + Send + Sync> },
    Tree(TreePmf<S>),
}

/// Metered pointwise access to an unnormalized mass function on `[1, N]`.
pub struct QueryCountedPmf<S> {
    backend: Backend<S>,
    queries: AtomicU64,
}

impl<S> std::fmt::Debug for QueryCountedPmf<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (kind, n) = match &self.backend {
            Backend::Dense(v) => ("dense", v.len() as u64),
            Backend::Callback { n, .. } => ("callback", *n),
            Backend::Tree(t) => ("tree", t.values.len() as u64),
        };
        f.debug_struct("QueryCountedPmf")
            .field("backend", &kind)
            .field("domain_size", &n)
            .field("queries", &self.queries.load(Ordering::Relaxed))
            .finish()
    }
}

impl<S: Real> QueryCountedPmf<S> {
    /// Dense backend; values are validated once here (finite, nonnegative,
    /// not identically zero).
    pub fn from_dense(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("empty mass function".into()));
        }
        validate_values(&values)?;
        Ok(Self { backend: Backend::Dense(values), queries: AtomicU64::new(0) })
    }

    /// Callback backend for targets too large to materialize. Values are
    /// validated per query; the not-identically-zero requirement cannot be
    /// checked eagerly and remains the caller's obligation.
    pub fn from_fn(n: u64, f: impl Fn(u64) -> S + Send + Sync + 'static) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("empty domain".into()));
        }
        Ok(Self { backend: Backend::Callback { n, f: Box::new(f) }, queries: AtomicU64::new(0) })
    }

    pub fn from_tree(tree: TreePmf<S>) -> Self {
        Self { backend: Backend::Tree(tree), queries: AtomicU64::new(0) }
    }

    /// Dense backend from a text file: one nonnegative decimal per line,
    /// line i holding p̃(i).
    pub fn from_dense_file(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                return Err(Error::Parse { line: lineno + 1, detail: "blank line".into() });
            }
            let v: f64 = trimmed.parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                detail: format!("{e}: {trimmed:?}"),
            })?;
            values.push(S::from_f64_lossy(v));
        }
        if values.is_empty() {
            return Err(Error::Parse { line: 1, detail: "empty file".into() });
        }
        Self::from_dense(values)
    }

    /// Domain size N; for tree backends this is the vertex count.
    pub fn domain_size(&self) -> u64 {
        match &self.backend {
            Backend::Dense(v) => v.len() as u64,
            Backend::Callback { n, .. } => *n,
            Backend::Tree(t) => t.vertex_count(),
        }
    }

    /// Depth of the tree backend, if this target is tree-shaped.
    pub fn tree_depth(&self) -> Option<u32> {
        match &self.backend {
            Backend::Tree(t) => Some(t.depth()),
            _ => None,
        }
    }

    /// Evaluate p̃(x). Every call — including repeats at the same point —
    /// increments the query counter by exactly one. Out-of-range indices are
    /// rejected without touching the counter.
    pub fn query(&self, x: u64) -> Result<S> {
        let n = self.domain_size();
        if x == 0 || x > n {
            return Err(Error::OutOfDomain { x, n });
        }
        self.queries.fetch_add(1, Ordering::Relaxed);
        match &self.backend {
            Backend::Dense(v) => Ok(v[(x - 1) as usize]),
            Backend::Callback { f, .. } => {
                let val = f(x);
                if !val.is_finite() || val < S::zero() {
                    return Err(Error::BadMassValue { x, value: val.to_f64_lossy() });
                }
                Ok(val)
            }
            Backend::Tree(t) => t.value(x),
        }
    }

    /// Queries issued since construction or the last reset.
    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset_queries(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }
}

fn validate_values<S: Real>(values: &[S]) -> Result<()> {
    let mut any_positive = false;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < S::zero() {
            return Err(Error::BadMassValue { x: i as u64 + 1, value: v.to_f64_lossy() });
        }
        if v > S::zero() {
            any_positive = true;
        }
    }
    if !any_positive {
        return Err(Error::ZeroMass);
    }
    Ok(())
}
