//! Order-statistic dictionary over `(value, index)` pairs.
//!
//! An arena-backed AVL tree augmented with subtree sizes. Entries are ordered
//! ascending by `(value, index)`, so rank queries resolve ties
//! deterministically: among equal values the **larger index ranks higher**.
//! All three operations — [`OrderStatMap::kth_largest`],
//! [`OrderStatMap::update`], and membership-by-key removal inside update —
//! run in `O(log K)` worst case.
//!
//! The structure is the workhorse behind the sublinear bandit player, which
//! interrogates it thousands of times per round; [`OrderStatMap::visits`]
//! counts every node touched during descents so tests can pin the
//! logarithmic access cost, and [`OrderStatMap::kth_calls`] counts rank
//! queries so callers can audit their own query complexity.

use std::cell::Cell;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node<S> {
    value: S,
    index: u64,
    left: u32,
    right: u32,
    height: u8,
    size: u32,
}

/// Order-statistic map keyed by `(value, index)`; see the module docs.
#[derive(Clone, Debug)]
pub struct OrderStatMap<S> {
    nodes: Vec<Node<S>>,
    root: u32,
    free: Vec<u32>,
    visits: Cell<u64>,
    kth_calls: Cell<u64>,
}

impl<S: Real> OrderStatMap<S> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            root: NIL,
            free: Vec::new(),
            visits: Cell::new(0),
            kth_calls: Cell::new(0),
        }
    }

    /// Build from `values`, entry `i` keyed as `(values[i], i)`. Balanced
    /// construction in `O(K log K)` (dominated by the sort).
    pub fn build(values: &[S]) -> Result<Self> {
        let mut map = Self::new();
        map.nodes.reserve(values.len());
        let mut pairs: Vec<(S, u64)> = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("non-finite value {v} at index {i}")));
            }
            pairs.push((v, i as u64));
        }
        pairs.sort_by(|a, b| cmp_key(a.0, a.1, b.0, b.1));
        map.root = map.from_sorted(&pairs);
        Ok(map)
    }

    pub fn len(&self) -> usize {
        if self.root == NIL {
            0
        } else {
            self.nodes[self.root as usize].size as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    /// Nodes touched by all descents since the last [`Self::reset_counters`].
    pub fn visits(&self) -> u64 {
        self.visits.get()
    }

    /// Rank queries answered since the last [`Self::reset_counters`].
    pub fn kth_calls(&self) -> u64 {
        self.kth_calls.get()
    }

    pub fn reset_counters(&self) {
        self.visits.set(0);
        self.kth_calls.set(0);
    }

    /// The `k`-th largest entry, `k = 1` being the maximum `(value, index)`
    /// pair. `O(log K)` via size-guided descent.
    pub fn kth_largest(&self, k: usize) -> Result<(S, u64)> {
        self.kth_calls.set(self.kth_calls.get() + 1);
        let len = self.len();
        if k == 0 || k > len {
            return Err(Error::RankOutOfRange { k: k as u64, len: len as u64 });
        }
        // Position from the small end, 0-based.
        let mut target = (len - k) as u32;
        let mut at = self.root;
        loop {
            self.visits.set(self.visits.get() + 1);
            let node = &self.nodes[at as usize];
            let left_size = self.size(node.left);
            match target.cmp(&left_size) {
                Ordering::Less => at = node.left,
                Ordering::Equal => return Ok((node.value, node.index)),
                Ordering::Greater => {
                    target -= left_size + 1;
                    at = node.right;
                }
            }
        }
    }

    /// Replace the entry `(old, index)` with `(new, index)`. Fails with
    /// [`Error::StaleEntry`] if the old pair is not present — the caller's
    /// view of the stored value has drifted — and leaves the map unchanged.
    pub fn update(&mut self, index: u64, old: S, new: S) -> Result<()> {
        if !new.is_finite() {
            return Err(Error::InvalidParam(format!(
                "non-finite replacement value {new} for index {index}"
            )));
        }
        self.remove(old, index)?;
        self.insert(new, index);
        Ok(())
    }

    /// Insert `(value, index)`; the pair must not already be present (pairs
    /// are unique because each index appears at most once in intended use).
    pub fn insert(&mut self, value: S, index: u64) {
        let id = self.alloc(value, index);
        self.root = self.insert_at(self.root, id);
    }

    /// Remove the exact pair `(value, index)`.
    pub fn remove(&mut self, value: S, index: u64) -> Result<()> {
        let (new_root, removed) = self.remove_at(self.root, value, index);
        if removed {
            self.root = new_root;
            Ok(())
        } else {
            Err(Error::StaleEntry { index, value: value.to_f64_lossy() })
        }
    }

    /// Entries in ascending `(value, index)` order; `O(K)`, for tests and
    /// diagnostics.
    pub fn entries(&self) -> Vec<(S, u64)> {
        let mut out = Vec::with_capacity(self.len());
        self.collect(self.root, &mut out);
        out
    }

    /// Panic unless every AVL and size invariant holds. Test support.
    pub fn assert_invariants(&self) {
        let mut seen = 0usize;
        self.check(self.root, None, None, &mut seen);
        assert_eq!(seen, self.len(), "size bookkeeping drifted");
    }

    // ---- internals ------------------------------------------------------

    fn alloc(&mut self, value: S, index: u64) -> u32 {
        let node = Node { value, index, left: NIL, right: NIL, height: 1, size: 1 };
        match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn from_sorted(&mut self, pairs: &[(S, u64)]) -> u32 {
        if pairs.is_empty() {
            return NIL;
        }
        let mid = pairs.len() / 2;
        let id = self.alloc(pairs[mid].0, pairs[mid].1);
        let left = self.from_sorted(&pairs[..mid]);
        let right = self.from_sorted(&pairs[mid + 1..]);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        self.refresh(id);
        id
    }

    fn size(&self, at: u32) -> u32 {
        if at == NIL {
            0
        } else {
            self.nodes[at as usize].size
        }
    }

    fn height(&self, at: u32) -> i32 {
        if at == NIL {
            0
        } else {
            self.nodes[at as usize].height as i32
        }
    }

    fn refresh(&mut self, at: u32) {
        let (l, r) = {
            let n = &self.nodes[at as usize];
            (n.left, n.right)
        };
        let h = 1 + self.height(l).max(self.height(r));
        let s = 1 + self.size(l) + self.size(r);
        let n = &mut self.nodes[at as usize];
        n.height = h as u8;
        n.size = s;
    }

    fn rotate_right(&mut self, at: u32) -> u32 {
        let l = self.nodes[at as usize].left;
        let lr = self.nodes[l as usize].right;
        self.nodes[at as usize].left = lr;
        self.nodes[l as usize].right = at;
        self.refresh(at);
        self.refresh(l);
        l
    }

    fn rotate_left(&mut self, at: u32) -> u32 {
        let r = self.nodes[at as usize].right;
        let rl = self.nodes[r as usize].left;
        self.nodes[at as usize].right = rl;
        self.nodes[r as usize].left = at;
        self.refresh(at);
        self.refresh(r);
        r
    }

    fn rebalance(&mut self, at: u32) -> u32 {
        self.refresh(at);
        let (l, r) = {
            let n = &self.nodes[at as usize];
            (n.left, n.right)
        };
        let bf = self.height(l) - self.height(r);
        if bf > 1 {
            let ln = &self.nodes[l as usize];
            if self.height(ln.left) < self.height(ln.right) {
                let new_l = self.rotate_left(l);
                self.nodes[at as usize].left = new_l;
            }
            self.rotate_right(at)
        } else if bf < -1 {
            let rn = &self.nodes[r as usize];
            if self.height(rn.right) < self.height(rn.left) {
                let new_r = self.rotate_right(r);
                self.nodes[at as usize].right = new_r;
            }
            self.rotate_left(at)
        } else {
            at
        }
    }

    fn insert_at(&mut self, at: u32, id: u32) -> u32 {
        if at == NIL {
            return id;
        }
        self.visits.set(self.visits.get() + 1);
        let (nv, ni) = {
            let n = &self.nodes[at as usize];
            (n.value, n.index)
        };
        let (v, i) = {
            let n = &self.nodes[id as usize];
            (n.value, n.index)
        };
        if cmp_key(v, i, nv, ni) == Ordering::Less {
            let child = self.nodes[at as usize].left;
            let new_child = self.insert_at(child, id);
            self.nodes[at as usize].left = new_child;
        } else {
            let child = self.nodes[at as usize].right;
            let new_child = self.insert_at(child, id);
            self.nodes[at as usize].right = new_child;
        }
        self.rebalance(at)
    }

    /// Returns the subtree's new root and whether the pair was found. The
    /// physically removed node is pushed onto the free list here, so one
    /// logical removal frees exactly one arena slot no matter which branch
    /// deleted it.
    fn remove_at(&mut self, at: u32, value: S, index: u64) -> (u32, bool) {
        if at == NIL {
            return (NIL, false);
        }
        self.visits.set(self.visits.get() + 1);
        let (nv, ni, nl, nr) = {
            let n = &self.nodes[at as usize];
            (n.value, n.index, n.left, n.right)
        };
        match cmp_key(value, index, nv, ni) {
            Ordering::Less => {
                let (child, removed) = self.remove_at(nl, value, index);
                if !removed {
                    return (at, false);
                }
                self.nodes[at as usize].left = child;
                (self.rebalance(at), true)
            }
            Ordering::Greater => {
                let (child, removed) = self.remove_at(nr, value, index);
                if !removed {
                    return (at, false);
                }
                self.nodes[at as usize].right = child;
                (self.rebalance(at), true)
            }
            Ordering::Equal => {
                if nl == NIL || nr == NIL {
                    self.free.push(at);
                    return (if nl == NIL { nr } else { nl }, true);
                }
                // Two children: lift the in-order successor's key here and
                // delete that key from the right subtree instead.
                let (sv, si) = self.min_key(nr);
                let (child, removed) = self.remove_at(nr, sv, si);
                debug_assert!(removed);
                {
                    let n = &mut self.nodes[at as usize];
                    n.value = sv;
                    n.index = si;
                    n.right = child;
                }
                (self.rebalance(at), true)
            }
        }
    }

    fn min_key(&self, mut at: u32) -> (S, u64) {
        loop {
            self.visits.set(self.visits.get() + 1);
            let n = &self.nodes[at as usize];
            if n.left == NIL {
                return (n.value, n.index);
            }
            at = n.left;
        }
    }

    fn collect(&self, at: u32, out: &mut Vec<(S, u64)>) {
        if at == NIL {
            return;
        }
        let n = &self.nodes[at as usize];
        self.collect(n.left, out);
        out.push((n.value, n.index));
        self.collect(n.right, out);
    }

    fn check(
        &self,
        at: u32,
        lo: Option<(S, u64)>,
        hi: Option<(S, u64)>,
        seen: &mut usize,
    ) -> (i32, u32) {
        if at == NIL {
            return (0, 0);
        }
        *seen += 1;
        let n = &self.nodes[at as usize];
        if let Some((lv, li)) = lo {
            assert_eq!(cmp_key(n.value, n.index, lv, li), Ordering::Greater, "order violated");
        }
        if let Some((hv, hi_i)) = hi {
            assert_eq!(cmp_key(n.value, n.index, hv, hi_i), Ordering::Less, "order violated");
        }
        let key = Some((n.value, n.index));
        let (lh, ls) = self.check(n.left, lo, key, seen);
        let (rh, rs) = self.check(n.right, key, hi, seen);
        assert!((lh - rh).abs() <= 1, "balance factor out of range at index {}", n.index);
        assert_eq!(n.height as i32, 1 + lh.max(rh), "height stale at index {}", n.index);
        assert_eq!(n.size, 1 + ls + rs, "size stale at index {}", n.index);
        (n.height as i32, n.size)
    }
}

impl<S: Real> Default for OrderStatMap<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Total order on keys; values are validated finite at the boundary, so the
/// partial comparison cannot fail.
fn cmp_key<S: Real>(av: S, ai: u64, bv: S, bi: u64) -> Ordering {
    av.partial_cmp(&bv).expect("finite values").then(ai.cmp(&bi))
}
