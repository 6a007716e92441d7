//! Stage drivers shared by the command line and the test suites.
//!
//! Mining and recommendation fan out over a rayon pool of `threads`
//! workers; results are collected in input order, so the output never
//! depends on the thread count.

use rayon::prelude::*;
use wslrec_core::corpus::{self, Corpus, SplitCorpus};
use wslrec_core::eval::{self, EvalReport};
use wslrec_core::modelfree::{self, SimilarityTable};
use wslrec_core::pipeline::{self, EnsembleCandidates, MinedLabelTable};
use wslrec_core::seed::stage_seed;
use wslrec_core::seqmodel::SequenceScorer;
use wslrec_core::trainer::{self, LabelContext, TrainingLog};
use wslrec_core::{ItemIdx, UserIdx};

use crate::config::RunConfig;
use crate::error::Result;

/// One ranked or ground-truth item list per user.
pub type ItemLists = Vec<Vec<ItemIdx>>;

pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    Ok(pool.install(f))
}

/// Freshly initialized model sized for `corpus`.
pub fn init_model(cfg: &RunConfig, corpus: &Corpus) -> Result<SequenceScorer> {
    Ok(SequenceScorer::new(
        corpus.n_items(),
        cfg.dim,
        cfg.encoder_kind()?,
        cfg.user_vectors(),
        stage_seed(cfg.seed, "init"),
    )?)
}

pub fn build_similarity(cfg: &RunConfig, corpus: &Corpus, split: &SplitCorpus) -> Result<SimilarityTable> {
    let weights = modelfree::build_weights(corpus, &split.train)?;
    Ok(modelfree::build_similarity(&weights, cfg.itemcf_prune.unwrap_or(usize::MAX)))
}

/// Trains `init` with the configured label strategy.
pub fn train_standard(
    cfg: &RunConfig,
    init: SequenceScorer,
    corpus: &Corpus,
    split: &SplitCorpus,
    similarity: Option<&SimilarityTable>,
    mined: Option<&MinedLabelTable>,
) -> Result<(SequenceScorer, TrainingLog)> {
    let strategy = cfg.label_strategy()?;
    let ctx = LabelContext { similarity, itemcf_include_history: cfg.itemcf_include_history, mined };
    let train = cfg.train_config("train");
    let mut hook = pipeline::early_stop_hook(corpus, &split.valid, train.max_history);
    Ok(trainer::fit(init, corpus, &split.train, &strategy, &ctx, &train, &mut hook)?)
}

pub fn pretrain(
    cfg: &RunConfig,
    init: SequenceScorer,
    corpus: &Corpus,
    split: &SplitCorpus,
    similarity: Option<&SimilarityTable>,
) -> Result<(SequenceScorer, TrainingLog)> {
    Ok(pipeline::pretrain(init, corpus, split, &cfg.weak()?, similarity, &cfg.train_config("pretrain"))?)
}

/// [`pipeline::mine_topk`] over the training users, in parallel.
pub fn mine(cfg: &RunConfig, model: &SequenceScorer, corpus: &Corpus, split: &SplitCorpus) -> Result<MinedLabelTable> {
    let k = cfg.mining_k;
    if k == 0 {
        return Err(wslrec_core::Error::InvalidConfig("mining_k must be >= 1".into()).into());
    }
    model.bind(corpus.n_items())?;
    let mut keys = Vec::new();
    for &u in &split.train {
        for inst in corpus::training_instances(corpus.sequence(u), cfg.max_history)? {
            keys.push((u, inst.t));
        }
    }
    let sets = with_pool(cfg.threads, || {
        keys.par_iter()
            .map(|&(u, t)| {
                let inst = corpus::instance_at(corpus.sequence(u), t, cfg.max_history);
                pipeline::mine_instance(model, inst.history, k)
            })
            .collect::<wslrec_core::Result<Vec<_>>>()
    })??;
    let mut table = MinedLabelTable::new(k);
    for ((u, t), set) in keys.into_iter().zip(sets) {
        table.insert(u, t, set);
    }
    Ok(table)
}

pub fn finetune(
    cfg: &RunConfig,
    pretrained: SequenceScorer,
    mined: &MinedLabelTable,
    corpus: &Corpus,
    split: &SplitCorpus,
) -> Result<(SequenceScorer, TrainingLog)> {
    Ok(pipeline::finetune(pretrained, mined, corpus, split, &cfg.train_config("finetune"))?)
}

/// Output of [`run_wslrec`].
pub struct RunArtifacts {
    pub pretrained: SequenceScorer,
    pub pretrain_log: TrainingLog,
    pub mined: MinedLabelTable,
    pub finetuned: SequenceScorer,
    pub finetune_log: TrainingLog,
}

/// Pre-train, mine, fine-tune. Matches [`pipeline::run_wslrec`] with the
/// same root seed; mining runs on the pool.
pub fn run_wslrec(
    cfg: &RunConfig,
    corpus: &Corpus,
    split: &SplitCorpus,
    similarity: Option<&SimilarityTable>,
) -> Result<RunArtifacts> {
    let init = init_model(cfg, corpus)?;
    let (pretrained, pretrain_log) = pretrain(cfg, init, corpus, split, similarity)?;
    let mined = mine(cfg, &pretrained, corpus, split)?;
    let (finetuned, finetune_log) = finetune(cfg, pretrained.clone(), &mined, corpus, split)?;
    Ok(RunArtifacts { pretrained, pretrain_log, mined, finetuned, finetune_log })
}

/// A ranked-list producer for evaluation.
#[derive(Clone, Copy)]
pub enum Recommender<'a> {
    /// Scores the last `max_history` items of the history.
    Model { model: &'a SequenceScorer, max_history: usize },
    Br,
    ItemCf { table: &'a SimilarityTable, include_history: bool },
}

impl Recommender<'_> {
    pub fn recommend(&self, history: &[ItemIdx], k: usize) -> wslrec_core::Result<Vec<ItemIdx>> {
        match *self {
            Recommender::Model { model, max_history } => model.topk_items(corpus::recent(history, max_history), k, &[]),
            Recommender::Br => Ok(modelfree::br_topk(history, k)),
            Recommender::ItemCf { table, include_history } => {
                Ok(modelfree::itemcf_topk(history, table, k, include_history))
            }
        }
    }
}

/// Ranked lists of length up to `k` for each user's evaluation history,
/// plus the matching ground-truth sets.
pub fn recommend_all(
    rec: Recommender<'_>,
    corpus: &Corpus,
    users: &[UserIdx],
    k: usize,
    threads: usize,
) -> Result<(ItemLists, ItemLists)> {
    if let Recommender::Model { model, .. } = rec {
        model.bind(corpus.n_items())?;
    }
    let pairs = with_pool(threads, || {
        users
            .par_iter()
            .map(|&u| {
                let (history, truth) = corpus::eval_split(corpus.sequence(u))?;
                Ok((rec.recommend(history, k)?, truth))
            })
            .collect::<wslrec_core::Result<Vec<_>>>()
    })??;
    Ok(pairs.into_iter().unzip())
}

pub fn evaluate(
    rec: Recommender<'_>,
    corpus: &Corpus,
    users: &[UserIdx],
    cutoffs: &[usize],
    ndcg_normalized: bool,
    threads: usize,
) -> Result<(EvalReport, ItemLists)> {
    let k = cutoffs.iter().copied().max().unwrap_or(0);
    let (recs, truths) = recommend_all(rec, corpus, users, k, threads)?;
    Ok((eval::report_from_lists(&recs, &truths, cutoffs, ndcg_normalized)?, recs))
}

/// Tunes the ensemble triple on `valid` and reports on `test` at cutoff `k`.
pub fn ensemble(
    cfg: &RunConfig,
    model: &SequenceScorer,
    table: &SimilarityTable,
    corpus: &Corpus,
    split: &SplitCorpus,
    k: usize,
) -> Result<((usize, usize, usize), EvalReport, ItemLists)> {
    let threads = cfg.threads;
    let model_rec = Recommender::Model { model, max_history: cfg.max_history };
    let cf = Recommender::ItemCf { table, include_history: cfg.itemcf_include_history };
    // the model list must cover backfill after up to 2k duplicates
    let depth = (3 * k).min(corpus.n_items());
    let candidates = |users: &[UserIdx]| -> Result<(Vec<EnsembleCandidates>, ItemLists)> {
        let (br, truths) = recommend_all(Recommender::Br, corpus, users, k, threads)?;
        let (itemcf, _) = recommend_all(cf, corpus, users, k, threads)?;
        let (ranked, _) = recommend_all(model_rec, corpus, users, depth, threads)?;
        let c = br
            .into_iter()
            .zip(itemcf)
            .zip(ranked)
            .map(|((br, itemcf), model)| EnsembleCandidates { br, itemcf, model })
            .collect();
        Ok((c, truths))
    };
    let (valid, valid_truths) = candidates(&split.valid)?;
    let (triple, _) = pipeline::tune_ensemble(&valid, &valid_truths, k)?;
    let (test, test_truths) = candidates(&split.test)?;
    let recs = test
        .iter()
        .map(|c| pipeline::ensemble_topk(&c.br, &c.itemcf, &c.model, triple, k))
        .collect::<wslrec_core::Result<Vec<_>>>()?;
    let report = eval::report_from_lists(&recs, &test_truths, &[k], cfg.ndcg_normalized)?;
    Ok((triple, report, recs))
}
