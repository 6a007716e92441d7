//! Pre-train on weak supervision, mine top-k sets with the pre-trained model,
//! fine-tune on the mined consensus labels. Also the ensemble baseline that
//! merges BR, ItemCF and model lists directly.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::corpus::{self, Corpus, SplitCorpus};
use crate::eval;
use crate::modelfree::SimilarityTable;
use crate::seed::stage_seed;
use crate::seqmodel::SequenceScorer;
use crate::trainer::{self, LabelContext, LabelStrategy, TrainConfig, TrainingLog, WeakSource};
use crate::{Error, ItemIdx, Result, UserIdx};

/// Cutoff of the validation recall used for early stopping.
pub const EARLY_STOP_CUTOFF: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakSupervisionConfig {
    pub sources: Vec<WeakSource>,
    /// Size of each source's top-k set.
    pub k_ws: usize,
    pub mining_k: usize,
    pub itemcf_include_history: bool,
}

impl Default for WeakSupervisionConfig {
    fn default() -> Self {
        Self {
            sources: alloc::vec![WeakSource::Br, WeakSource::ItemCf],
            k_ws: 20,
            mining_k: 50,
            itemcf_include_history: false,
        }
    }
}

impl WeakSupervisionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::InvalidConfig("weak-supervision source set is empty".into()));
        }
        if self.k_ws == 0 || self.mining_k == 0 {
            return Err(Error::InvalidConfig("k_ws and mining_k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn strategy(&self) -> LabelStrategy {
        LabelStrategy::WeakUnion { sources: self.sources.clone(), k: self.k_ws }
    }
}

/// `(user, t) -> B^{Pre}_{u,t}`, each set kept in rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedLabelTable {
    k: usize,
    sets: BTreeMap<(UserIdx, usize), Vec<ItemIdx>>,
}

impl MinedLabelTable {
    pub fn new(k: usize) -> Self {
        Self { k, sets: BTreeMap::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Panics if `items` is longer than `k`.
    pub fn insert(&mut self, user: UserIdx, t: usize, items: Vec<ItemIdx>) {
        assert!(items.len() <= self.k, "mined set of {} exceeds k = {}", items.len(), self.k);
        self.sets.insert((user, t), items);
    }

    pub fn get(&self, user: UserIdx, t: usize) -> Option<&[ItemIdx]> {
        self.sets.get(&(user, t)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Entries in `(user, t)` order.
    pub fn iter(&self) -> impl Iterator<Item = (UserIdx, usize, &[ItemIdx])> + '_ {
        self.sets.iter().map(|(&(u, t), v)| (u, t, v.as_slice()))
    }

    /// Training instances of `users` with no mined set.
    pub fn missing(&self, corpus: &Corpus, users: &[UserIdx]) -> Result<Vec<(UserIdx, usize)>> {
        let mut out = Vec::new();
        for &u in users {
            for inst in corpus::training_instances(corpus.sequence(u), 1)? {
                if !self.sets.contains_key(&inst.key()) {
                    out.push(inst.key());
                }
            }
        }
        Ok(out)
    }
}

/// Validation recall at `k` of `model` over `users`.
pub fn validation_recall(
    model: &SequenceScorer,
    corpus: &Corpus,
    users: &[UserIdx],
    k: usize,
    max_history: usize,
) -> Result<f64> {
    let report = eval::evaluate(corpus, users, &[k], false, |_, history, k| {
        model.topk_items(corpus::recent(history, max_history), k, &[])
    })?;
    Ok(report.at(k).map_or(0.0, |m| m.recall))
}

/// Early-stopping hook: recall@50 on the validation users.
pub fn early_stop_hook<'a>(
    corpus: &'a Corpus,
    valid: &'a [UserIdx],
    max_history: usize,
) -> impl FnMut(&SequenceScorer) -> Result<f64> + 'a {
    move |m| validation_recall(m, corpus, valid, EARLY_STOP_CUTOFF, max_history)
}

/// Trains `init` on the union of the configured weak sources.
pub fn pretrain(
    init: SequenceScorer,
    corpus: &Corpus,
    split: &SplitCorpus,
    weak: &WeakSupervisionConfig,
    similarity: Option<&SimilarityTable>,
    config: &TrainConfig,
) -> Result<(SequenceScorer, TrainingLog)> {
    weak.validate()?;
    if weak.sources.contains(&WeakSource::ItemCf) && similarity.is_none() {
        return Err(Error::MissingSource("ItemCF similarity table".into()));
    }
    let ctx = LabelContext { similarity, itemcf_include_history: weak.itemcf_include_history, mined: None };
    let mut hook = early_stop_hook(corpus, &split.valid, config.max_history);
    trainer::fit(init, corpus, &split.train, &weak.strategy(), &ctx, config, &mut hook)
}

/// Unrestricted top-`k` of one history under `model`.
pub fn mine_instance(model: &SequenceScorer, history: &[ItemIdx], k: usize) -> Result<Vec<ItemIdx>> {
    model.topk_items(history, k, &[])
}

/// Mines `B^{Pre}_{u,t}` for every training instance of `users`.
pub fn mine_topk(
    model: &SequenceScorer,
    corpus: &Corpus,
    users: &[UserIdx],
    mining_k: usize,
    max_history: usize,
) -> Result<MinedLabelTable> {
    if mining_k == 0 {
        return Err(Error::InvalidConfig("mining_k must be >= 1".into()));
    }
    model.bind(corpus.n_items())?;
    let mut table = MinedLabelTable::new(mining_k);
    for &u in users {
        for inst in corpus::training_instances(corpus.sequence(u), max_history)? {
            table.insert(u, inst.t, mine_instance(model, inst.history, mining_k)?);
        }
    }
    Ok(table)
}

/// Fine-tunes from `pretrained` with positives `{v_{t+1}} | (mined & future)`.
pub fn finetune(
    pretrained: SequenceScorer,
    mined: &MinedLabelTable,
    corpus: &Corpus,
    split: &SplitCorpus,
    config: &TrainConfig,
) -> Result<(SequenceScorer, TrainingLog)> {
    let missing = mined.missing(corpus, &split.train)?;
    if !missing.is_empty() {
        return Err(Error::CoverageGap(missing));
    }
    let ctx = LabelContext { mined: Some(mined), ..Default::default() };
    let mut hook = early_stop_hook(corpus, &split.valid, config.max_history);
    trainer::fit(pretrained, corpus, &split.train, &LabelStrategy::MinedFineTune, &ctx, config, &mut hook)
}

/// Everything a full run produces.
#[derive(Debug, Clone)]
pub struct WslrecRun {
    pub pretrained: SequenceScorer,
    pub pretrain_log: TrainingLog,
    pub mined: MinedLabelTable,
    pub finetuned: SequenceScorer,
    pub finetune_log: TrainingLog,
}

/// The three stages in sequence. Pre-training and fine-tuning draw their
/// randomness from the `"pretrain"` and `"finetune"` streams of
/// `config.seed`.
pub fn run_wslrec(
    init: SequenceScorer,
    corpus: &Corpus,
    split: &SplitCorpus,
    weak: &WeakSupervisionConfig,
    similarity: Option<&SimilarityTable>,
    config: &TrainConfig,
) -> Result<WslrecRun> {
    let pre_cfg = TrainConfig { seed: stage_seed(config.seed, "pretrain"), ..config.clone() };
    let (pretrained, pretrain_log) = pretrain(init, corpus, split, weak, similarity, &pre_cfg)?;
    let mined = mine_topk(&pretrained, corpus, &split.train, weak.mining_k, config.max_history)?;
    let fin_cfg = TrainConfig { seed: stage_seed(config.seed, "finetune"), ..config.clone() };
    let (finetuned, finetune_log) = finetune(pretrained.clone(), &mined, corpus, split, &fin_cfg)?;
    Ok(WslrecRun { pretrained, pretrain_log, mined, finetuned, finetune_log })
}

/// Merges the BR top-`a`, ItemCF top-`b` and model top-`c` lists, drops
/// repeats (first occurrence wins) and backfills from the model's ranking
/// past position `c` until `k` items are collected or the ranking runs out.
pub fn ensemble_topk(
    br: &[ItemIdx],
    itemcf: &[ItemIdx],
    model_ranked: &[ItemIdx],
    (a, b, c): (usize, usize, usize),
    k: usize,
) -> Result<Vec<ItemIdx>> {
    if a + b + c != k {
        return Err(Error::InvalidConfig(format!("a + b + c = {} but k = {k}", a + b + c)));
    }
    let mut out: Vec<ItemIdx> = Vec::with_capacity(k);
    let push = |v: ItemIdx, out: &mut Vec<ItemIdx>| {
        if out.len() < k && !out.contains(&v) {
            out.push(v);
        }
    };
    let head = br
        .iter()
        .take(a)
        .chain(itemcf.iter().take(b))
        .chain(model_ranked.iter().take(c));
    for &v in head {
        push(v, &mut out);
    }
    for &v in model_ranked.iter().skip(c) {
        if out.len() >= k {
            break;
        }
        push(v, &mut out);
    }
    Ok(out)
}

/// Every `(a, b, c)` with `a + b + c = k` on a grid of step
/// `max(1, k / 10)`; `c` absorbs the remainder.
pub fn ensemble_grid(k: usize) -> Vec<(usize, usize, usize)> {
    let step = (k / 10).max(1);
    let mut out = Vec::new();
    let mut a = 0;
    while a <= k {
        let mut b = 0;
        while a + b <= k {
            out.push((a, b, k - a - b));
            b += step;
        }
        a += step;
    }
    out
}

/// Per-user candidate lists for the ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleCandidates {
    pub br: Vec<ItemIdx>,
    pub itemcf: Vec<ItemIdx>,
    /// Model ranking, at least `k` long when the vocabulary allows.
    pub model: Vec<ItemIdx>,
}

/// Picks the grid triple with the highest recall@k on the given users
/// (earliest triple on ties) and returns it with that recall.
pub fn tune_ensemble(
    candidates: &[EnsembleCandidates],
    truths: &[Vec<ItemIdx>],
    k: usize,
) -> Result<((usize, usize, usize), f64)> {
    let mut best: Option<((usize, usize, usize), f64)> = None;
    for triple in ensemble_grid(k) {
        let recs = candidates
            .iter()
            .map(|c| ensemble_topk(&c.br, &c.itemcf, &c.model, triple, k))
            .collect::<Result<Vec<_>>>()?;
        let recall = eval::metrics_at_k(&recs, truths, k, false)?.recall;
        if best.map_or(true, |(_, r)| recall > r) {
            best = Some((triple, recall));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty ensemble grid".into()))
}
