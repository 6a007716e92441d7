//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wslrec_core::corpus::{BehaviorSequence, Corpus, IdMap, RawSequence};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Corpus with `n_users` random sequences over `n_items` items (no
/// filtering); lengths in `min_len..=max_len`.
pub fn random_corpus(seed: u64, n_users: usize, n_items: usize, min_len: usize, max_len: usize) -> Corpus {
    let mut r = rng(seed);
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    for i in 0..n_items {
        items.intern(&format!("i{i}"));
    }
    let sequences = (0..n_users)
        .map(|u| {
            let len = r.gen_range(min_len..=max_len);
            BehaviorSequence {
                user: users.intern(&format!("u{u}")),
                items: (0..len).map(|_| r.gen_range(0..n_items as u32)).collect(),
            }
        })
        .collect();
    Corpus::from_parts(users, items, sequences).unwrap()
}

// ---- filtering ----

/// Deletes one offending user or item at a time until none is left.
pub fn brute_force_filter(raw: &[RawSequence], min_user: usize, min_item: usize) -> Vec<(String, Vec<String>)> {
    let mut data: Vec<(String, Vec<String>)> = raw.iter().map(|s| (s.user.clone(), s.items.clone())).collect();
    loop {
        if let Some(pos) = data.iter().position(|(_, items)| items.len() < min_user) {
            data.remove(pos);
            continue;
        }
        let mut users_of: HashMap<&str, HashSet<&str>> = HashMap::new();
        for (u, items) in &data {
            for it in items {
                users_of.entry(it).or_default().insert(u);
            }
        }
        let rare: Option<String> = data
            .iter()
            .flat_map(|(_, items)| items.iter())
            .find(|it| users_of[it.as_str()].len() < min_item)
            .cloned();
        match rare {
            Some(item) => {
                for (_, items) in data.iter_mut() {
                    items.retain(|x| *x != item);
                }
            }
            None => return data,
        }
    }
}

// ---- ItemCF ----

/// Dense weighted cosine similarity over `train_users`, `sim[v][w]`.
pub fn dense_similarity(corpus: &Corpus, train_users: &[u32]) -> Vec<Vec<f64>> {
    let n = corpus.n_items();
    let mut w = vec![vec![0.0f64; n]; train_users.len()];
    for (r, &u) in train_users.iter().enumerate() {
        let seq = &corpus.sequence(u).items;
        let denom = (1.0 + seq.len() as f64).log2();
        for (v, cell) in w[r].iter_mut().enumerate() {
            let count = seq.iter().filter(|&&x| x as usize == v).count();
            *cell = count as f64 / denom;
        }
    }
    let mut sim = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let dot: f64 = w.iter().map(|row| row[a] * row[b]).sum();
            let na: f64 = w.iter().map(|row| row[a] * row[a]).sum::<f64>().sqrt();
            let nb: f64 = w.iter().map(|row| row[b] * row[b]).sum::<f64>().sqrt();
            sim[a][b] = if na > 0.0 && nb > 0.0 { dot / (na * nb) } else { 0.0 };
        }
    }
    sim
}

/// Full sort over `(item, score)` by descending score, ascending item.
pub fn full_sort(mut scored: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
}

/// Top-k over every non-history item with positive max-similarity.
pub fn dense_itemcf(history: &[u32], sim: &[Vec<f64>], k: usize) -> Vec<u32> {
    let hist: HashSet<u32> = history.iter().copied().collect();
    let scored: Vec<(u32, f64)> = (0..sim.len() as u32)
        .filter(|v| !hist.contains(v))
        .map(|v| (v, history.iter().map(|&h| sim[v as usize][h as usize]).fold(0.0, f64::max)))
        .filter(|p| p.1 > 0.0)
        .collect();
    full_sort(scored).into_iter().take(k).map(|p| p.0).collect()
}

// ---- model ----

/// Index of the first `k` entries of the full argsort, skipping `exclude`.
pub fn argsort_topk(scores: &[f64], k: usize, exclude: &[u32]) -> Vec<u32> {
    let ex: HashSet<u32> = exclude.iter().copied().collect();
    let scored = scores.iter().enumerate().filter(|(i, _)| !ex.contains(&(*i as u32))).map(|(i, &s)| (i as u32, s)).collect();
    full_sort(scored).into_iter().take(k).map(|p| p.0).collect()
}

/// Two-sum compensated softmax: exact-ish reference for small vectors.
pub fn softmax_extended(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &t in &terms {
        let s = hi + t;
        let bb = s - hi;
        lo += (hi - (s - bb)) + (t - bb);
        hi = s;
    }
    let total = hi + lo;
    terms.iter().map(|t| t / total).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// GRU final hidden state written with explicit scalar loops over the
/// documented parameter layout.
pub fn gru_reference(params: &[f64], n_items: usize, d: usize, history: &[u32]) -> Vec<f64> {
    let enc = &params[n_items * d..];
    let mat = |blk: usize, i: usize, j: usize| -> f64 {
        let triple = blk / 3;
        enc[triple * (2 * d * d + d) + (blk % 3) * d * d + i * d + j]
    };
    let bias = |blk: usize, i: usize| -> f64 {
        let triple = blk / 3;
        enc[triple * (2 * d * d + d) + 2 * d * d + i]
    };
    let mut h = vec![0.0; d];
    for &v in history {
        let x = &params[v as usize * d..(v as usize + 1) * d];
        let mut z = vec![0.0; d];
        let mut r = vec![0.0; d];
        for i in 0..d {
            let mut az = bias(0, i);
            let mut ar = bias(3, i);
            for j in 0..d {
                az += mat(0, i, j) * x[j] + mat(1, i, j) * h[j];
                ar += mat(3, i, j) * x[j] + mat(4, i, j) * h[j];
            }
            z[i] = sigmoid(az);
            r[i] = sigmoid(ar);
        }
        let mut next = vec![0.0; d];
        for i in 0..d {
            let mut ah = bias(6, i);
            for j in 0..d {
                ah += mat(6, i, j) * x[j] + mat(7, i, j) * (r[j] * h[j]);
            }
            next[i] = (1.0 - z[i]) * h[i] + z[i] * ah.tanh();
        }
        h = next;
    }
    h
}

/// Central differences of `f` at `params`.
pub fn finite_difference(params: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + step;
            let up = f(&p);
            p[i] = orig - step;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Sampled-softmax loss written directly from its definition:
/// `-sum_p [g(p) - ln(exp(g(p)) + sum_n exp(g(n)))]`, `g = f - ln(1/|V|)`.
pub fn reference_loss(scores: &dyn Fn(u32) -> f64, n_items: usize, positives: &[u32], negatives: &[u32]) -> f64 {
    let g = |v: u32| scores(v) + (n_items as f64).ln();
    positives
        .iter()
        .map(|&p| {
            let denom = g(p).exp() + negatives.iter().map(|&n| g(n).exp()).sum::<f64>();
            -(g(p) - denom.ln())
        })
        .sum()
}

/// Scalar Adam, textbook form.
pub fn scalar_adam(mut x: f64, grad: impl Fn(f64) -> f64, lr: f64, steps: usize) -> Vec<f64> {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let (mut m, mut v) = (0.0, 0.0);
    let mut out = Vec::new();
    for t in 1..=steps {
        let g = grad(x);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t as i32));
        let vh = v / (1.0 - b2.powi(t as i32));
        x -= lr * mh / (vh.sqrt() + eps);
        out.push(x);
    }
    out
}

// ---- metrics ----

pub struct RefMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ndcg: f64,
    pub hit: f64,
}

/// Straight transcription of the per-user averaged definitions.
pub fn reference_metrics(recs: &[Vec<u32>], truths: &[BTreeSet<u32>], k: usize) -> RefMetrics {
    let n = recs.len() as f64;
    let mut m = RefMetrics { precision: 0.0, recall: 0.0, f1: 0.0, ndcg: 0.0, hit: 0.0 };
    for (rec, truth) in recs.iter().zip(truths) {
        let b: BTreeSet<u32> = rec.iter().take(k).copied().collect();
        let inter = b.intersection(truth).count() as f64;
        m.precision += inter / k as f64;
        m.recall += inter / truth.len() as f64;
        m.f1 += 2.0 * inter / (k as f64 + truth.len() as f64);
        m.hit += if inter > 0.0 { 1.0 } else { 0.0 };
        for i in 1..=k.min(rec.len()) {
            if truth.contains(&rec[i - 1]) {
                m.ndcg += 1.0 / ((i + 1) as f64).log2();
            }
        }
    }
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    m.ndcg /= n;
    m.hit /= n;
    m
}

pub fn reference_hdr(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> f64 {
    let union = a.union(b).count();
    let inter = a.intersection(b).count();
    if union == 0 {
        0.0
    } else {
        (union - inter) as f64 / union as f64
    }
}

pub fn reference_mean_hdr(values: &[f64]) -> f64 {
    let num: f64 = values.iter().sum();
    let den = values.iter().filter(|&&v| v > 0.0).count();
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

/// Fine-tune positives (next item plus mined future items) recomputed from scratch.
pub fn reference_finetune_labels(seq: &[u32], t: usize, mined: &[u32]) -> BTreeSet<u32> {
    let future: BTreeSet<u32> = seq[t..].iter().copied().collect();
    let mut out: BTreeSet<u32> = mined.iter().copied().filter(|v| future.contains(v)).collect();
    out.insert(seq[t]);
    out
}

/// Groups `(key, value)` pairs.
pub fn group<K: Ord, V>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<K, Vec<V>> {
    let mut out: BTreeMap<K, Vec<V>> = BTreeMap::new();
    for (k, v) in pairs {
        out.entry(k).or_default().push(v);
    }
    out
}

// ---- fixtures ----

/// Six users over twelve items with repeats, shared items and one user whose
/// futures never reappear in their history.
pub const FIXTURE_EVENTS: &str = "\
u1\ta\t1\nu1\tb\t2\nu1\tc\t3\nu1\ta\t4\nu1\td\t5\nu1\te\t6\nu1\tb\t7\nu1\tf\t8
u2\tb\t1\nu2\tc\t2\nu2\td\t3\nu2\tg\t4\nu2\tc\t5\nu2\th\t6\nu2\td\t7
u3\te\t1\nu3\tf\t2\nu3\tg\t3\nu3\th\t4\nu3\ti\t5\nu3\tj\t6\nu3\te\t7\nu3\tk\t8\nu3\tl\t9
u4\ta\t1\nu4\tc\t2\nu4\te\t3\nu4\tg\t4\nu4\ti\t5\nu4\tk\t6
u5\tl\t1\nu5\tk\t2\nu5\tj\t3\nu5\ti\t4\nu5\th\t5\nu5\tg\t6\nu5\tf\t7\nu5\tl\t8
u6\tb\t1\nu6\td\t2\nu6\tf\t3\nu6\th\t4\nu6\tj\t5\nu6\tl\t6\nu6\tb\t7\nu6\ta\t8\nu6\tc\t9\nu6\te\t10
";

pub fn fixture_corpus() -> Corpus {
    let events = wslrec_core::corpus::parse_events(FIXTURE_EVENTS.as_bytes()).unwrap();
    let raw = wslrec_core::corpus::build_sequences(&events);
    wslrec_core::corpus::filter_corpus(&raw, 5, 1).unwrap()
}

// ---- gradient check ----

pub const ENCODERS: [(wslrec_core::seqmodel::EncoderKind, usize); 4] = [
    (wslrec_core::seqmodel::EncoderKind::MeanPool, 1),
    (wslrec_core::seqmodel::EncoderKind::Gru, 1),
    (wslrec_core::seqmodel::EncoderKind::MultiHead, 1),
    (wslrec_core::seqmodel::EncoderKind::MultiHead, 3),
];

pub fn strategy_names() -> [&'static str; 5] {
    ["next1", "nextc:3", "nextall", "weak:br,itemcf,original:4", "finetune"]
}

/// Largest relative error between the analytic loss gradient and central
/// differences for one random tiny model, instance and strategy.
pub fn gradient_check_case(
    kind: wslrec_core::seqmodel::EncoderKind,
    heads: usize,
    strategy: &str,
    seed: u64,
    floor: f64,
) -> f64 {
    let (grads, fd) = gradient_pair(kind, heads, strategy, seed);
    grads.iter().zip(&fd).map(|(&a, &b)| rel_err(a, b, floor)).fold(0.0, f64::max)
}

/// Analytic and central-difference gradients for one case of
/// [`gradient_check_case`].
pub fn gradient_pair(
    kind: wslrec_core::seqmodel::EncoderKind,
    heads: usize,
    strategy: &str,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    use wslrec_core::corpus::instance_at;
    use wslrec_core::modelfree::{build_similarity, build_weights};
    use wslrec_core::pipeline::{mine_instance, MinedLabelTable};
    use wslrec_core::seqmodel::SequenceScorer;
    use wslrec_core::trainer::{build_labels, parse_strategy, sample_negatives, sampled_softmax_loss, LabelContext, Proposal};

    let mut r = rng(seed ^ 0x5eed);
    let n_items = r.gen_range(8..=30);
    let dim = r.gen_range(2..=8);
    let corpus = random_corpus(seed, 12, n_items, 6, 14);
    let users: Vec<u32> = (0..12).collect();
    let sim = build_similarity(&build_weights(&corpus, &users).unwrap(), usize::MAX);
    let model = SequenceScorer::new(n_items, dim, kind, heads, seed).unwrap();
    let seq = corpus.sequence(r.gen_range(0..12));
    let t = r.gen_range(4..seq.items.len());
    let inst = instance_at(seq, t, 20);
    let mut mined = MinedLabelTable::new(10);
    mined.insert(inst.user, t, mine_instance(&model, inst.history, 10).unwrap());
    let ctx = LabelContext { similarity: Some(&sim), itemcf_include_history: false, mined: Some(&mined) };
    let positives = build_labels(&parse_strategy(strategy).unwrap(), &inst, &ctx).unwrap();
    let negatives = sample_negatives(&mut r, Proposal::Uniform, n_items, 10, &positives).unwrap();

    let (_, grads) = sampled_softmax_loss(&model, inst.history, &positives, &negatives, Some(Proposal::Uniform)).unwrap();
    let fd = finite_difference(model.params(), 1e-6, |p| {
        let m = SequenceScorer::from_params(n_items, dim, kind, heads, p.to_vec()).unwrap();
        sampled_softmax_loss(&m, inst.history, &positives, &negatives, Some(Proposal::Uniform)).unwrap().0
    });
    (grads, fd)
}

/// Denominator floor for gradient relative errors. Central differences at
/// step 1e-6 carry roundoff of about `eps * |loss| / step`, around 1e-9, so
/// entries below this floor are compared on an absolute scale.
pub const GRAD_FLOOR: f64 = 1e-4;

/// Compares every fine-tune positive set of `users` against the set rebuilt
/// from the raw sequence and the mined table. Returns the number of
/// instances checked and how many reduce to the next item alone.
pub fn check_finetune_labels(
    corpus: &Corpus,
    users: &[u32],
    mined: &wslrec_core::pipeline::MinedLabelTable,
    max_history: usize,
) -> (usize, usize) {
    use wslrec_core::trainer::{instance_labels, LabelContext, LabelStrategy};
    let ctx = LabelContext { mined: Some(mined), ..Default::default() };
    let labelled = instance_labels(corpus, users, &LabelStrategy::MinedFineTune, &ctx, max_history).unwrap();
    let (mut checked, mut degenerate) = (0, 0);
    for ((u, t), got) in labelled {
        let seq = &corpus.sequence(u).items;
        let want = reference_finetune_labels(seq, t, mined.get(u, t).unwrap());
        assert_eq!(got, want.iter().copied().collect::<Vec<_>>(), "instance ({u}, {t})");
        checked += 1;
        if want.len() == 1 {
            degenerate += 1;
        }
    }
    (checked, degenerate)
}
