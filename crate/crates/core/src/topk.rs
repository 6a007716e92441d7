use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::ItemIdx;

/// Descending score, ascending item index on ties.
#[inline]
pub(crate) fn rank_order(a: &(ItemIdx, f64), b: &(ItemIdx, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Keeps the `k` best `(item, score)` pairs under [`rank_order`], sorted.
pub(crate) fn select_topk(mut scored: Vec<(ItemIdx, f64)>, k: usize) -> Vec<(ItemIdx, f64)> {
    if k == 0 {
        scored.clear();
        return scored;
    }
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(rank_order);
    scored
}
