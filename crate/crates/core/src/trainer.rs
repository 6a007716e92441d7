//! Sampled-softmax training under a pluggable positive-label strategy.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{self, sorted_set, Corpus};
use crate::modelfree::{br_topk, itemcf_topk, SimilarityTable};
use crate::pipeline::MinedLabelTable;
use crate::seqmodel::{axpy, SequenceScorer};
use crate::{Error, ItemIdx, Result, UserIdx};

/// A weak-supervision source for pre-training positives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WeakSource {
    /// The last `k` history items.
    Br,
    /// The `k` items most similar to any history item.
    ItemCf,
    /// The standard label: the next immediate item.
    Original,
}

impl WeakSource {
    pub fn name(self) -> &'static str {
        match self {
            WeakSource::Br => "br",
            WeakSource::ItemCf => "itemcf",
            WeakSource::Original => "original",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "br" => Some(WeakSource::Br),
            "itemcf" => Some(WeakSource::ItemCf),
            "original" => Some(WeakSource::Original),
            _ => None,
        }
    }
}

/// How the positive set of a training instance is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelStrategy {
    /// The next `c` items; `NextC(1)` is standard training.
    NextC(usize),
    /// Every future item.
    NextAll,
    /// Union of the top-`k` sets of the given sources.
    WeakUnion { sources: Vec<WeakSource>, k: usize },
    /// The next item plus mined items that also occur in the future.
    MinedFineTune,
}

impl LabelStrategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            LabelStrategy::NextC(0) => Err(Error::InvalidConfig("next-c needs c >= 1".into())),
            LabelStrategy::WeakUnion { sources, .. } if sources.is_empty() => {
                Err(Error::InvalidConfig("weak-supervision source set is empty".into()))
            }
            LabelStrategy::WeakUnion { k: 0, .. } => {
                Err(Error::InvalidConfig("weak-supervision cutoff must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Artifacts some strategies need.
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelContext<'a> {
    pub similarity: Option<&'a SimilarityTable>,
    pub itemcf_include_history: bool,
    pub mined: Option<&'a MinedLabelTable>,
}

/// The positive set for one instance, sorted ascending. Never empty.
pub fn build_labels(
    strategy: &LabelStrategy,
    instance: &corpus::TrainingInstance<'_>,
    ctx: &LabelContext<'_>,
) -> Result<Vec<ItemIdx>> {
    let labels = match strategy {
        LabelStrategy::NextC(c) => sorted_set(&instance.upcoming[..(*c).min(instance.upcoming.len())]),
        LabelStrategy::NextAll => instance.future.clone(),
        LabelStrategy::WeakUnion { sources, k } => {
            let mut out = Vec::new();
            for src in sources {
                match src {
                    WeakSource::Br => out.extend(br_topk(instance.history, *k)),
                    WeakSource::ItemCf => {
                        let table = ctx
                            .similarity
                            .ok_or_else(|| Error::MissingSource("ItemCF similarity table".into()))?;
                        out.extend(itemcf_topk(instance.history, table, *k, ctx.itemcf_include_history));
                    }
                    WeakSource::Original => out.push(instance.next_item),
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        }
        LabelStrategy::MinedFineTune => {
            let table = ctx.mined.ok_or_else(|| Error::MissingSource("mined label table".into()))?;
            let mined = table
                .get(instance.user, instance.t)
                .ok_or_else(|| Error::CoverageGap(vec![instance.key()]))?;
            let mut out: Vec<ItemIdx> =
                mined.iter().copied().filter(|v| instance.future.binary_search(v).is_ok()).collect();
            out.push(instance.next_item);
            out.sort_unstable();
            out.dedup();
            out
        }
    };
    debug_assert!(!labels.is_empty());
    Ok(labels)
}

/// `((user, t), positives)` for one training instance.
pub type InstanceLabels = ((UserIdx, usize), Vec<ItemIdx>);

/// Key and positive set of every training instance of `users`, in user
/// order then `t` order.
pub fn instance_labels(
    corpus: &Corpus,
    users: &[UserIdx],
    strategy: &LabelStrategy,
    ctx: &LabelContext<'_>,
    max_history: usize,
) -> Result<Vec<InstanceLabels>> {
    strategy.validate()?;
    let mut out = Vec::new();
    for &u in users {
        let seq = corpus.sequence(u);
        for inst in corpus::training_instances(seq, max_history)? {
            let labels = build_labels(strategy, &inst, ctx)?;
            out.push((inst.key(), labels));
        }
    }
    Ok(out)
}

/// Proposal distribution for negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Proposal {
    #[default]
    Uniform,
}

impl Proposal {
    pub fn log_prob(self, _item: ItemIdx, n_items: usize) -> f64 {
        match self {
            Proposal::Uniform => -libm::log(n_items as f64),
        }
    }
}

/// `count` i.i.d. draws from `proposal`, redrawing any member of `exclude`.
pub fn sample_negatives<R: Rng + ?Sized>(
    rng: &mut R,
    proposal: Proposal,
    n_items: usize,
    count: usize,
    exclude: &[ItemIdx],
) -> Result<Vec<ItemIdx>> {
    let banned = sorted_set(exclude);
    let live = banned.iter().filter(|&&v| (v as usize) < n_items).count();
    if live >= n_items {
        return Err(Error::NoNegativeCandidates);
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = match proposal {
            Proposal::Uniform => rng.gen_range(0..n_items as ItemIdx),
        };
        if banned.binary_search(&v).is_err() {
            out.push(v);
        }
    }
    Ok(out)
}

/// Sampled-softmax loss of one instance and its gradient over all
/// parameters.
///
/// Per positive `p` the loss is
/// `-[g(p) - log(exp(g(p)) + sum_n exp(g(n)))]` with `g(v) = f(v) - log Q(v)`,
/// evaluated as `log(1 + sum_n exp(g(n) - g(p)))`. The differences are formed
/// as `(f(n) - f(p)) - (log Q(n) - log Q(p))`, so a uniform proposal changes
/// nothing, bit for bit. `proposal = None` drops the correction entirely.
/// Losses of several positives are summed.
pub fn sampled_softmax_loss(
    model: &SequenceScorer,
    history: &[ItemIdx],
    positives: &[ItemIdx],
    negatives: &[ItemIdx],
    proposal: Option<Proposal>,
) -> Result<(f64, Vec<f64>)> {
    let mut grads = vec![0.0; model.params().len()];
    let loss = accumulate_loss(model, history, positives, negatives, proposal, 1.0, &mut grads)?;
    Ok((loss, grads))
}

/// As [`sampled_softmax_loss`], adding `scale * gradient` into `grads`.
pub(crate) fn accumulate_loss(
    model: &SequenceScorer,
    history: &[ItemIdx],
    positives: &[ItemIdx],
    negatives: &[ItemIdx],
    proposal: Option<Proposal>,
    scale: f64,
    grads: &mut [f64],
) -> Result<f64> {
    if positives.is_empty() {
        return Err(Error::InvalidConfig("positive set is empty".into()));
    }
    let n_items = model.n_items();
    if let Some(&item) = positives.iter().chain(negatives).find(|&&v| v as usize >= n_items) {
        return Err(Error::ItemOutOfRange { item, n_items });
    }
    model.check_history(history)?;
    let (rep, tape) = model.forward(history);
    let log_q = |v: ItemIdx| proposal.map_or(0.0, |q| q.log_prob(v, n_items));
    let score = |v: ItemIdx| model.score_unchecked(&rep, v);

    let neg: Vec<(f64, usize)> = negatives.iter().map(|&v| score(v)).collect();
    if let Some(i) = neg.iter().position(|s| !s.0.is_finite()) {
        return Err(nonfinite("negative score", negatives[i]));
    }
    let mut coef_neg = vec![0.0; negatives.len()];
    let mut coef_pos = Vec::with_capacity(positives.len());
    let mut total = 0.0;
    let mut diffs = vec![0.0; negatives.len()];
    for &p in positives {
        let (fp, jp) = score(p);
        if !fp.is_finite() {
            return Err(nonfinite("positive score", p));
        }
        let lq_p = log_q(p);
        for ((d, &(fnv, _)), &n) in diffs.iter_mut().zip(&neg).zip(negatives) {
            *d = (fnv - fp) - (log_q(n) - lq_p);
        }
        let shift = diffs.iter().copied().fold(0.0f64, f64::max);
        let base = libm::exp(-shift);
        let mut denom = base;
        for d in &mut diffs {
            *d = libm::exp(*d - shift);
            denom += *d;
        }
        let loss = shift + libm::log(denom);
        if !loss.is_finite() {
            return Err(nonfinite("loss", p));
        }
        total += loss;
        let mut pulled = 0.0;
        for (c, e) in coef_neg.iter_mut().zip(&diffs) {
            let w = e / denom;
            *c += w;
            pulled += w;
        }
        coef_pos.push((p, jp, -pulled));
    }

    let d = model.dim();
    let mut grad_rep = vec![0.0; model.heads() * d];
    let mut push = |v: ItemIdx, j: usize, c: f64, grads: &mut [f64]| {
        if c == 0.0 {
            return;
        }
        let c = c * scale;
        let off = v as usize * d;
        axpy(c, rep.vector(j), &mut grads[off..off + d]);
        axpy(c, model.embedding(v), &mut grad_rep[j * d..(j + 1) * d]);
    };
    for &(p, j, c) in &coef_pos {
        push(p, j, c, grads);
    }
    for ((&v, &(_, j)), &c) in negatives.iter().zip(&neg).zip(&coef_neg) {
        push(v, j, c, grads);
    }
    model.backward(history, &tape, &grad_rep, grads);
    Ok(total)
}

fn nonfinite(what: &str, item: ItemIdx) -> Error {
    Error::NonFinite(format!("{what} for item {item}"))
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "adam state has {} entries, params {}, grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            if self.m[i] == 0.0 {
                continue;
            }
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.epsilon);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub negatives_per_instance: usize,
    /// Pool `batch_size * negatives_per_instance` shared negatives per batch
    /// when true; only `negatives_per_instance` in total when false.
    pub negatives_scale_with_batch: bool,
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Non-improving evaluations tolerated before stopping.
    pub patience: usize,
    pub eval_interval: usize,
    pub seed: u64,
    /// History truncation length.
    pub max_history: usize,
    pub proposal: Proposal,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            negatives_per_instance: 10,
            negatives_scale_with_batch: true,
            learning_rate: 0.001,
            max_iterations: 1_000_000,
            patience: 5,
            eval_interval: 1000,
            seed: 0,
            max_history: 20,
            proposal: Proposal::Uniform,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("negatives_per_instance", self.negatives_per_instance),
            ("patience", self.patience),
            ("eval_interval", self.eval_interval),
            ("max_history", self.max_history),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// One periodic evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub iter: usize,
    /// Mean instance loss since the previous record; `None` before training.
    pub loss_avg: Option<f64>,
    pub recall50_val: f64,
    /// Whether this evaluation set a new best.
    pub best: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn best_metric(&self) -> Option<f64> {
        self.records.iter().filter(|r| r.best).map(|r| r.recall50_val).next_back()
    }

    pub fn first_metric(&self) -> Option<f64> {
        self.records.first().map(|r| r.recall50_val)
    }
}

/// Trains `model` and returns the parameters with the best validation metric.
///
/// The metric is computed by `evaluate` before training and then every
/// `eval_interval` iterations (and once more at the last iteration).
/// Training stops after `patience` consecutive non-improving evaluations.
pub fn fit(
    model: SequenceScorer,
    corpus: &Corpus,
    train_users: &[UserIdx],
    strategy: &LabelStrategy,
    ctx: &LabelContext<'_>,
    config: &TrainConfig,
    evaluate: &mut dyn FnMut(&SequenceScorer) -> Result<f64>,
) -> Result<(SequenceScorer, TrainingLog)> {
    config.validate()?;
    model.bind(corpus.n_items())?;
    let labelled = instance_labels(corpus, train_users, strategy, ctx, config.max_history)?;
    if labelled.is_empty() && config.max_iterations > 0 {
        return Err(Error::InvalidConfig("no training instances".into()));
    }
    fit_labelled(model, corpus, &labelled, config, evaluate)
}

/// [`fit`] over precomputed `(instance key, positives)` pairs.
pub fn fit_labelled(
    mut model: SequenceScorer,
    corpus: &Corpus,
    labelled: &[((UserIdx, usize), Vec<ItemIdx>)],
    config: &TrainConfig,
    evaluate: &mut dyn FnMut(&SequenceScorer) -> Result<f64>,
) -> Result<(SequenceScorer, TrainingLog)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(model.params().len(), config.learning_rate);
    let mut grads = vec![0.0; model.params().len()];
    let mut order: Vec<usize> = (0..labelled.len()).collect();
    let mut cursor = order.len();
    let batch = config.batch_size.min(labelled.len().max(1));
    let pool_size = if config.negatives_scale_with_batch {
        batch * config.negatives_per_instance
    } else {
        config.negatives_per_instance
    };

    let mut log = TrainingLog::default();
    let mut best_metric = evaluate(&model)?;
    let mut best_params = model.params().to_vec();
    log.records.push(LogRecord { iter: 0, loss_avg: None, recall50_val: best_metric, best: true });
    let mut stale = 0;
    let (mut loss_sum, mut loss_count) = (0.0, 0usize);
    let mut negatives = Vec::with_capacity(pool_size);

    for iter in 1..=config.max_iterations {
        if cursor + batch > order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let members = &order[cursor..cursor + batch];
        cursor += batch;

        let pool = sample_negatives(&mut rng, config.proposal, model.n_items(), pool_size, &[])?;
        grads.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / batch as f64;
        for &i in members {
            let ((user, t), positives) = &labelled[i];
            let items = &corpus.sequence(*user).items;
            let history = corpus::recent(&items[..*t], config.max_history);
            negatives.clear();
            negatives.extend(pool.iter().copied().filter(|v| positives.binary_search(v).is_err()));
            loss_sum += accumulate_loss(
                &model,
                history,
                positives,
                &negatives,
                Some(config.proposal),
                scale,
                &mut grads,
            )?;
            loss_count += 1;
        }
        adam.step(model.params_mut(), &grads)?;

        if iter % config.eval_interval == 0 || iter == config.max_iterations {
            let metric = evaluate(&model)?;
            let improved = metric > best_metric;
            log.records.push(LogRecord {
                iter,
                loss_avg: Some(loss_sum / loss_count.max(1) as f64),
                recall50_val: metric,
                best: improved,
            });
            loss_sum = 0.0;
            loss_count = 0;
            if improved {
                best_metric = metric;
                best_params.copy_from_slice(model.params());
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
    }
    model.params_mut().copy_from_slice(&best_params);
    Ok((model, log))
}

/// Parses `next1`, `nextc:<c>`, `nextall` or `weak:<src,src>:<k>`.
pub fn parse_strategy(s: &str) -> Result<LabelStrategy> {
    let bad = || Error::InvalidConfig(format!("unknown label strategy {s:?}"));
    let strategy = match s {
        "next1" => LabelStrategy::NextC(1),
        "nextall" => LabelStrategy::NextAll,
        "finetune" => LabelStrategy::MinedFineTune,
        _ => {
            if let Some(c) = s.strip_prefix("nextc:") {
                LabelStrategy::NextC(c.parse().map_err(|_| bad())?)
            } else if let Some(rest) = s.strip_prefix("weak:") {
                let (srcs, k) = rest.rsplit_once(':').ok_or_else(bad)?;
                LabelStrategy::WeakUnion { sources: parse_sources(srcs)?, k: k.parse().map_err(|_| bad())? }
            } else {
                return Err(bad());
            }
        }
    };
    strategy.validate()?;
    Ok(strategy)
}

/// Comma-separated source names, deduplicated in canonical order.
pub fn parse_sources(s: &str) -> Result<Vec<WeakSource>> {
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        out.push(
            WeakSource::parse(name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown weak source {name:?}")))?,
        );
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn strategy_name(s: &LabelStrategy) -> String {
    match s {
        LabelStrategy::NextC(1) => "next1".into(),
        LabelStrategy::NextC(c) => format!("nextc:{c}"),
        LabelStrategy::NextAll => "nextall".into(),
        LabelStrategy::WeakUnion { sources, k } => {
            let names: Vec<&str> = sources.iter().map(|s| s.name()).collect();
            format!("weak:{}:{k}", names.join(","))
        }
        LabelStrategy::MinedFineTune => "finetune".into(),
    }
}
