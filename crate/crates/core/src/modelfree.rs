//! Model-free recommenders used as weak-supervision sources: behavioral
//! retargeting (recently consumed items) and item-based collaborative
//! filtering over a weighted cosine similarity.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{sorted_set, Corpus};
use crate::topk::{rank_order, select_topk};
use crate::{Error, ItemIdx, Result, UserIdx};

/// Sparse per-user item weights `W[u][v] = count(v in S_u) / log2(1 + n_u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserItemWeights {
    rows: Vec<(UserIdx, Vec<(ItemIdx, f64)>)>,
    n_items: usize,
}

impl UserItemWeights {
    /// `(user, [(item, weight)])` rows in the order the users were given;
    /// entries are sorted by item.
    pub fn rows(&self) -> &[(UserIdx, Vec<(ItemIdx, f64)>)] {
        &self.rows
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.1.is_empty())
    }
}

/// Weights over the training users only, so similarities never see
/// validation or test behavior.
pub fn build_weights(corpus: &Corpus, train_users: &[UserIdx]) -> Result<UserItemWeights> {
    let mut rows = Vec::with_capacity(train_users.len());
    for &u in train_users {
        if u as usize >= corpus.n_users() {
            return Err(Error::Dimension(format!("user {u} not in corpus of {}", corpus.n_users())));
        }
        let items = &corpus.sequence(u).items;
        let denom = libm::log2(1.0 + items.len() as f64);
        let mut sorted = items.clone();
        sorted.sort_unstable();
        let mut entries: Vec<(ItemIdx, f64)> = Vec::new();
        for chunk in sorted.chunk_by(|a, b| a == b) {
            entries.push((chunk[0], chunk.len() as f64 / denom));
        }
        rows.push((u, entries));
    }
    Ok(UserItemWeights { rows, n_items: corpus.n_items() })
}

/// Per-item neighbor lists sorted by descending similarity (ascending item
/// on ties), self pairs excluded, each truncated to the pruning width.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTable {
    rows: Vec<Vec<(ItemIdx, f64)>>,
}

impl SimilarityTable {
    /// Validates and wraps rows loaded from elsewhere.
    pub fn from_rows(rows: Vec<Vec<(ItemIdx, f64)>>) -> Result<Self> {
        let n = rows.len();
        for (v, row) in rows.iter().enumerate() {
            for (j, &(w, s)) in row.iter().enumerate() {
                if w as usize >= n {
                    return Err(Error::ItemOutOfRange { item: w, n_items: n });
                }
                if w as usize == v {
                    return Err(Error::Dimension(format!("self pair stored for item {v}")));
                }
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::NonFinite(format!("similarity {s} of ({v}, {w}) outside [0, 1]")));
                }
                if j > 0 && rank_order(&row[j - 1], &row[j]).is_ge() {
                    return Err(Error::Dimension(format!("row {v} is not sorted")));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn n_items(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, item: ItemIdx) -> &[(ItemIdx, f64)] {
        self.rows.get(item as usize).map_or(&[], Vec::as_slice)
    }

    pub fn rows(&self) -> &[Vec<(ItemIdx, f64)>] {
        &self.rows
    }

    /// Stored similarity of the ordered pair, if present.
    pub fn get(&self, a: ItemIdx, b: ItemIdx) -> Option<f64> {
        self.row(a).iter().find(|p| p.0 == b).map(|p| p.1)
    }
}

/// Weighted cosine similarity between every pair of items with at least one
/// common user, pruned to the `prune` best neighbors per item.
///
/// Cost is proportional to the number of co-occurring (user, item, item)
/// triples rather than `|V|^2`. Both orientations of a pair accumulate the
/// same products in the same user order, so stored values are exactly
/// symmetric.
pub fn build_similarity(weights: &UserItemWeights, prune: usize) -> SimilarityTable {
    let n = weights.n_items;
    let mut inverted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, (_, entries)) in weights.rows.iter().enumerate() {
        for &(v, w) in entries {
            inverted[v as usize].push((r, w));
        }
    }
    let norms: Vec<f64> = inverted
        .iter()
        .map(|col| libm::sqrt(col.iter().map(|&(_, w)| w * w).sum::<f64>()))
        .collect();

    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<ItemIdx> = Vec::new();
    let mut rows = Vec::with_capacity(n);
    for v in 0..n {
        for &(r, wv) in &inverted[v] {
            for &(other, wo) in &weights.rows[r].1 {
                let o = other as usize;
                if o == v {
                    continue;
                }
                if acc[o] == 0.0 {
                    touched.push(other);
                }
                acc[o] += wv * wo;
            }
        }
        let mut row: Vec<(ItemIdx, f64)> = touched
            .drain(..)
            .map(|o| {
                let dot = core::mem::take(&mut acc[o as usize]);
                (o, (dot / (norms[v] * norms[o as usize])).min(1.0))
            })
            .collect();
        row = select_topk(row, prune);
        rows.push(row);
    }
    SimilarityTable { rows }
}

/// Behavioral retargeting: the distinct items at the last `k` positions of
/// `history`, most recent first.
pub fn br_topk(history: &[ItemIdx], k: usize) -> Vec<ItemIdx> {
    let mut out: Vec<ItemIdx> = Vec::with_capacity(k.min(history.len()));
    for &v in history.iter().rev().take(k) {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// ItemCF candidates with their score `max_{h in history} sim(v, h)`,
/// ranked best first.
///
/// With `include_history` false, items already in `history` are dropped.
/// With it true, history items are kept with `sim(v, v) = 1`.
pub fn itemcf_ranked(
    history: &[ItemIdx],
    table: &SimilarityTable,
    k: usize,
    include_history: bool,
) -> Vec<(ItemIdx, f64)> {
    let seen = sorted_set(history);
    let mut best: BTreeMap<ItemIdx, f64> = BTreeMap::new();
    for &h in &seen {
        for &(v, s) in table.row(h) {
            if seen.binary_search(&v).is_ok() {
                continue;
            }
            let e = best.entry(v).or_insert(s);
            if s > *e {
                *e = s;
            }
        }
    }
    if include_history {
        for &h in &seen {
            best.insert(h, 1.0);
        }
    }
    select_topk(best.into_iter().collect(), k)
}

/// Top-`k` ItemCF items; fewer when the neighborhood is small.
pub fn itemcf_topk(
    history: &[ItemIdx],
    table: &SimilarityTable,
    k: usize,
    include_history: bool,
) -> Vec<ItemIdx> {
    itemcf_ranked(history, table, k, include_history).into_iter().map(|p| p.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BehaviorSequence, IdMap};
    use alloc::format;

    fn corpus(seqs: &[&[u32]]) -> Corpus {
        let mut users = IdMap::new();
        let mut items = IdMap::new();
        let n_items = seqs.iter().flat_map(|s| s.iter()).max().map_or(0, |m| m + 1);
        for i in 0..n_items {
            items.intern(&format!("i{i}"));
        }
        let sequences = seqs
            .iter()
            .enumerate()
            .map(|(u, s)| BehaviorSequence { user: users.intern(&format!("u{u}")), items: s.to_vec() })
            .collect();
        Corpus::from_parts(users, items, sequences).unwrap()
    }

    #[test]
    fn weights_follow_log_damping() {
        let c = corpus(&[&[0, 1, 2], &[3, 4, 3, 5, 6, 7, 8]]);
        let w = build_weights(&c, &[0, 1]).unwrap();
        assert_eq!(w.rows()[0].1, vec![(0, 0.5), (1, 0.5), (2, 0.5)]);
        let row1 = &w.rows()[1].1;
        assert_eq!(row1.len(), 6);
        let w3 = row1.iter().find(|p| p.0 == 3).unwrap().1;
        assert!((w3 - 2.0 / 3.0).abs() < 1e-15);
        assert!(row1.iter().all(|p| p.0 != 0));
    }

    #[test]
    fn parallel_and_disjoint_supports() {
        let c = corpus(&[&[0, 1], &[2, 3]]);
        let t = build_similarity(&build_weights(&c, &[0, 1]).unwrap(), usize::MAX);
        assert_eq!(t.get(0, 1), Some(1.0));
        assert_eq!(t.get(1, 0), Some(1.0));
        assert_eq!(t.get(0, 2), None);
        assert!(t.row(0).iter().all(|p| p.0 != 0));
    }

    #[test]
    fn pruning_keeps_best() {
        let c = corpus(&[&[0, 1, 2], &[0, 1], &[0, 3, 4]]);
        let full = build_similarity(&build_weights(&c, &[0, 1, 2]).unwrap(), usize::MAX);
        let pruned = build_similarity(&build_weights(&c, &[0, 1, 2]).unwrap(), 1);
        assert_eq!(pruned.row(0), &full.row(0)[..1]);
        assert_eq!(pruned.row(0)[0].0, 1);
    }

    #[test]
    fn br_examples() {
        assert_eq!(br_topk(&[0, 1, 2, 3], 2), vec![3, 2]);
        assert_eq!(br_topk(&[0, 1, 1], 2), vec![1]);
        assert_eq!(br_topk(&[0], 5), vec![0]);
    }

    #[test]
    fn itemcf_examples() {
        let t = SimilarityTable::from_rows(vec![vec![(2, 0.9), (3, 0.4)], vec![], vec![], vec![]]).unwrap();
        assert_eq!(itemcf_topk(&[0], &t, 1, false), vec![2]);

        let t = SimilarityTable::from_rows(vec![vec![(2, 0.3)], vec![(2, 0.8)], vec![], vec![]]).unwrap();
        let r = itemcf_ranked(&[0, 1], &t, 1, false);
        assert_eq!(r, vec![(2, 0.8)]);

        let t = SimilarityTable::from_rows(vec![vec![(1, 0.5)], vec![(0, 0.5)]]).unwrap();
        assert!(itemcf_topk(&[0, 1], &t, 3, false).is_empty());
        assert_eq!(itemcf_topk(&[0, 1], &t, 3, true), vec![0, 1]);
    }

    #[test]
    fn from_rows_rejects_bad_tables() {
        assert!(SimilarityTable::from_rows(vec![vec![(0, 0.5)]]).is_err());
        assert!(SimilarityTable::from_rows(vec![vec![(1, 0.2), (2, 0.5)], vec![], vec![]]).is_err());
        assert!(SimilarityTable::from_rows(vec![vec![(1, 1.5)], vec![]]).is_err());
    }
}
