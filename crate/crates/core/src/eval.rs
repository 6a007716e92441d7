//! Per-user averaged retrieval metrics and the hits difference rate.

use alloc::vec::Vec;

use crate::corpus::{self, sorted_set, Corpus};
use crate::{Error, ItemIdx, Result, UserIdx};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CutoffMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Discounted cumulative gain; divided by the ideal gain only when the
    /// normalized variant is requested.
    pub ndcg: f64,
    pub hit_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub users: usize,
    /// Metrics per cutoff, in the order requested.
    pub cutoffs: Vec<(usize, CutoffMetrics)>,
}

impl EvalReport {
    pub fn at(&self, k: usize) -> Option<&CutoffMetrics> {
        self.cutoffs.iter().find(|c| c.0 == k).map(|c| &c.1)
    }
}

/// `sum_{i=1..n} 1 / log2(i + 1)`.
pub fn dcg_bound(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / libm::log2(i as f64 + 1.0)).sum()
}

/// Metrics of a single user. `truth` must be a sorted set.
///
/// The recommendation list is cut to `k`; shorter lists are used as they are
/// while precision still divides by `k`.
pub fn user_metrics(rec: &[ItemIdx], truth: &[ItemIdx], k: usize, ndcg_normalized: bool) -> CutoffMetrics {
    let top = &rec[..rec.len().min(k)];
    let hits = sorted_set(top).iter().filter(|v| truth.binary_search(v).is_ok()).count() as f64;
    let mut dcg = 0.0;
    for (i, v) in top.iter().enumerate() {
        if truth.binary_search(v).is_ok() {
            dcg += 1.0 / libm::log2(i as f64 + 2.0);
        }
    }
    if ndcg_normalized && dcg > 0.0 {
        dcg /= dcg_bound(k.min(truth.len()));
    }
    let y = truth.len() as f64;
    CutoffMetrics {
        precision: hits / k as f64,
        recall: hits / y,
        f1: 2.0 * hits / (k as f64 + y),
        ndcg: dcg,
        hit_rate: if hits > 0.0 { 1.0 } else { 0.0 },
    }
}

/// Averages [`user_metrics`] over users. `truths[i]` are sorted sets.
pub fn metrics_at_k(
    recs: &[Vec<ItemIdx>],
    truths: &[Vec<ItemIdx>],
    k: usize,
    ndcg_normalized: bool,
) -> Result<CutoffMetrics> {
    if recs.len() != truths.len() {
        return Err(Error::Dimension(alloc::format!(
            "{} recommendation lists for {} users",
            recs.len(),
            truths.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("cutoff must be >= 1".into()));
    }
    if let Some(i) = truths.iter().position(Vec::is_empty) {
        return Err(Error::InvalidConfig(alloc::format!("user #{i} has an empty ground-truth set")));
    }
    let mut sum = CutoffMetrics::default();
    for (rec, truth) in recs.iter().zip(truths) {
        let m = user_metrics(rec, truth, k, ndcg_normalized);
        sum.precision += m.precision;
        sum.recall += m.recall;
        sum.f1 += m.f1;
        sum.ndcg += m.ndcg;
        sum.hit_rate += m.hit_rate;
    }
    let n = recs.len().max(1) as f64;
    Ok(CutoffMetrics {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
        ndcg: sum.ndcg / n,
        hit_rate: sum.hit_rate / n,
    })
}

/// `B_u & Y_u` for one method, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HitSet(Vec<ItemIdx>);

impl HitSet {
    /// Hits of the top `k` of `rec` against the sorted set `truth`.
    pub fn new(rec: &[ItemIdx], truth: &[ItemIdx], k: usize) -> Self {
        let top = sorted_set(&rec[..rec.len().min(k)]);
        HitSet(top.into_iter().filter(|v| truth.binary_search(v).is_ok()).collect())
    }

    pub fn from_items(items: &[ItemIdx]) -> Self {
        HitSet(sorted_set(items))
    }

    pub fn items(&self) -> &[ItemIdx] {
        &self.0
    }
}

/// `(|H1 | H2| - |H1 & H2|) / |H1 | H2|`, zero when both are empty.
pub fn hdr(a: &HitSet, b: &HitSet) -> f64 {
    let (x, y) = (&a.0, &b.0);
    let (mut i, mut j, mut both) = (0, 0, 0usize);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                both += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = x.len() + y.len() - both;
    if union == 0 {
        0.0
    } else {
        (union - both) as f64 / union as f64
    }
}

/// Sum of per-user HDR over the number of users with positive HDR.
pub fn mean_hdr(values: &[f64]) -> f64 {
    let positive = values.iter().filter(|&&h| h > 0.0).count();
    if positive == 0 {
        0.0
    } else {
        values.iter().sum::<f64>() / positive as f64
    }
}

/// Evaluates a recommender over `users` with the 80/20 split of each
/// sequence. The recommender gets `(user, history, max_cutoff)` and returns a
/// ranked list; each cutoff uses its prefix.
pub fn evaluate<F>(
    corpus: &Corpus,
    users: &[UserIdx],
    cutoffs: &[usize],
    ndcg_normalized: bool,
    mut recommend: F,
) -> Result<EvalReport>
where
    F: FnMut(UserIdx, &[ItemIdx], usize) -> Result<Vec<ItemIdx>>,
{
    let k_max = cutoffs.iter().copied().max().unwrap_or(0);
    let mut recs = Vec::with_capacity(users.len());
    let mut truths = Vec::with_capacity(users.len());
    for &u in users {
        let (history, truth) = corpus::eval_split(corpus.sequence(u))?;
        recs.push(recommend(u, history, k_max)?);
        truths.push(truth);
    }
    report_from_lists(&recs, &truths, cutoffs, ndcg_normalized)
}

/// Builds a report from precomputed lists and truths.
pub fn report_from_lists(
    recs: &[Vec<ItemIdx>],
    truths: &[Vec<ItemIdx>],
    cutoffs: &[usize],
    ndcg_normalized: bool,
) -> Result<EvalReport> {
    let mut report = EvalReport { users: recs.len(), cutoffs: Vec::with_capacity(cutoffs.len()) };
    for &k in cutoffs {
        report.cutoffs.push((k, metrics_at_k(recs, truths, k, ndcg_normalized)?));
    }
    Ok(report)
}
