//! Small integer helpers shared across modules.

/// ⌈log2 n⌉ for n ≥ 1, with ⌈log2 1⌉ = 0.
pub(crate) fn ceil_log2(n: u64) -> u32 {
    debug_assert!(n >= 1);
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Depth of a heap-ordered vertex: the root 1 has depth 0, children of v are
/// 2v and 2v + 1.
pub(crate) fn vertex_depth(x: u64) -> u32 {
    debug_assert!(x >= 1);
    x.ilog2()
}
