//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use wslrec_core::corpus::{build_sequences, filter_corpus, split_users, SplitCorpus};
use wslrec_core::eval::{self, HitSet};
use wslrec_core::synth;
use wslrec_core::UserIdx;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{self, write_text};
use crate::runner::{self, Recommender};

#[derive(Debug, Parser)]
#[command(name = "wslrec", version, about = "Weakly supervised training for sequential recommenders")]
pub struct Cli {
    /// JSON file of flat config keys; flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Root seed; every stage derives its own stream from it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for mining and evaluation (output does not depend on it)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted-cluster event file
    Synth(SynthArgs),
    /// Filter events into a corpus directory with a train/valid/test split
    Preprocess(PreprocessArgs),
    /// Build the ItemCF similarity table from the training users
    Itemcf(ItemcfArgs),
    /// Train a model with a single label strategy
    Train(TrainCmd),
    /// Train on the union of weak sources
    Pretrain(PretrainCmd),
    /// Mine top-k sets for every training instance
    Mine(MineCmd),
    /// Fine-tune a pre-trained checkpoint on mined labels
    Finetune(FinetuneCmd),
    /// Pre-train, mine and fine-tune, writing every artifact
    Run(RunCmd),
    /// Report precision, recall, F1, NDCG and hit rate
    Evaluate(EvaluateCmd),
    /// Mean hits difference rate between two recommendation files
    Hdr(HdrCmd),
    /// Tune and evaluate the BR + ItemCF + model merge
    Ensemble(EnsembleCmd),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of users
    #[arg(long)]
    pub users: Option<usize>,
    /// Number of items, divisible by the cluster count
    #[arg(long)]
    pub items: Option<usize>,
    /// Number of item clusters
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Probability a fresh item stays in the current cluster
    #[arg(long)]
    pub p_in: Option<f64>,
    /// Probability of re-consuming one of the last five items
    #[arg(long)]
    pub repeat: Option<f64>,
    /// Shortest generated sequence
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Longest generated sequence
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Event file to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Event file, `user<TAB>item<TAB>timestamp`
    #[arg(long)]
    pub input: PathBuf,
    /// Corpus directory to write
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum interactions per user
    #[arg(long)]
    pub min_user: Option<usize>,
    /// Minimum distinct users per item
    #[arg(long)]
    pub min_item: Option<usize>,
    /// Train/valid/test ratios, e.g. 8,1,1
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub split: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct ItemcfArgs {
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Neighbors kept per item (all when omitted)
    #[arg(long)]
    pub prune: Option<usize>,
    /// Output path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Sequence encoder
    #[arg(long, value_parser = ["gru", "meanpool", "multihead"])]
    pub encoder: Option<String>,
    /// Embedding dimension
    #[arg(long)]
    pub dim: Option<usize>,
    /// User vectors of the multi-head encoder
    #[arg(long)]
    pub heads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Instances per batch
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Negatives per instance
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Draw `negatives` per batch instead of per instance
    #[arg(long)]
    pub shared_negatives: bool,
    /// Adam learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Iteration cap
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Non-improving evaluations before stopping
    #[arg(long)]
    pub patience: Option<usize>,
    /// Iterations between validation evaluations
    #[arg(long)]
    pub eval_interval: Option<usize>,
    /// Most recent history items fed to the encoder
    #[arg(long)]
    pub max_history: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WeakArgs {
    /// Weak sources, comma separated: br, itemcf, original
    #[arg(long)]
    pub weak: Option<String>,
    /// Top-k size of each weak source
    #[arg(long)]
    pub kws: Option<usize>,
    /// Mined set size
    #[arg(long)]
    pub mine_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// next1 | nextc:<c> | nextall | weak:<sources>:<k> | finetune
    #[arg(long)]
    pub strategy: Option<String>,
    /// Similarity table, needed by itemcf weak labels
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// Mined table, needed by the finetune strategy
    #[arg(long)]
    pub mined: Option<PathBuf>,
    /// Let ItemCF recommend items already in the history
    #[arg(long)]
    pub itemcf_include_history: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Checkpoint to write
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (JSON lines) to write
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PretrainCmd {
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Similarity table written by `itemcf`
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// Let ItemCF recommend items already in the history
    #[arg(long)]
    pub itemcf_include_history: bool,
    #[command(flatten)]
    pub weak: WeakArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Output path
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (JSON lines) to write
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineCmd {
    /// Model checkpoint to read
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Mined set size
    #[arg(long)]
    pub k: Option<usize>,
    /// Most recent history items fed to the encoder
    #[arg(long)]
    pub max_history: Option<usize>,
    /// Output path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FinetuneCmd {
    /// Model checkpoint to read
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Mined table written by `mine`
    #[arg(long)]
    pub mined: PathBuf,
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Output path
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (JSON lines) to write
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunCmd {
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Similarity table written by `itemcf`
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// Let ItemCF recommend items already in the history
    #[arg(long)]
    pub itemcf_include_history: bool,
    #[command(flatten)]
    pub weak: WeakArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Directory for checkpoints, mined table, logs and the resolved config
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Model,
    Br,
    Itemcf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Part {
    Valid,
    Test,
}

impl Part {
    fn users(self, split: &SplitCorpus) -> &[UserIdx] {
        match self {
            Part::Valid => &split.valid,
            Part::Test => &split.test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateCmd {
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Recommender to evaluate
    #[arg(long, value_enum, default_value_t = Method::Model)]
    pub method: Method,
    /// Checkpoint, for the model method
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Similarity table, for the itemcf method
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// Let ItemCF recommend items already in the history
    #[arg(long)]
    pub itemcf_include_history: bool,
    /// Cutoffs, e.g. 20,50
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Divide DCG by the ideal DCG
    #[arg(long)]
    pub ndcg_normalized: bool,
    /// Most recent history items fed to the encoder
    #[arg(long)]
    pub max_history: Option<usize>,
    /// Users to evaluate
    #[arg(long, value_enum, default_value_t = Part::Test)]
    pub split: Part,
    /// JSON report to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recommendation lists to write, cut at the largest k
    #[arg(long)]
    pub recs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HdrCmd {
    /// Recommendation file written by `evaluate --recs`
    #[arg(long)]
    pub rec_a: PathBuf,
    /// Second recommendation file, same users in the same order
    #[arg(long)]
    pub rec_b: PathBuf,
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Cutoff of the hit sets
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// JSON summary to write
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleCmd {
    /// Corpus directory written by `preprocess` (or the `corpus` config key)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model checkpoint to read
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Similarity table written by `itemcf`
    #[arg(long)]
    pub similarity: PathBuf,
    /// Let ItemCF recommend items already in the history
    #[arg(long)]
    pub itemcf_include_history: bool,
    /// Cutoff of the merged list
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Divide DCG by the ideal DCG
    #[arg(long)]
    pub ndcg_normalized: bool,
    /// Most recent history items fed to the encoder
    #[arg(long)]
    pub max_history: Option<usize>,
    /// JSON summary to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recommendation lists to write
    #[arg(long)]
    pub recs: Option<PathBuf>,
}

macro_rules! set {
    ($cfg:expr, $($field:ident = $value:expr),* $(,)?) => {
        { $( if let Some(v) = $value.clone() { $cfg.$field = v; } )* }
    };
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg, encoder = self.encoder, dim = self.dim, heads = self.heads);
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(
            cfg,
            batch_size = self.batch_size,
            negatives_per_instance = self.negatives,
            learning_rate = self.lr,
            max_iterations = self.max_iterations,
            patience = self.patience,
            eval_interval = self.eval_interval,
            max_history = self.max_history,
        );
        if self.shared_negatives {
            cfg.negatives_scale_with_batch = false;
        }
    }
}

impl WeakArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg, weak_sources = self.weak, k_ws = self.kws, mining_k = self.mine_k);
    }
}

impl Command {
    fn corpus(&self) -> Option<&PathBuf> {
        match self {
            Command::Synth(_) | Command::Preprocess(_) => None,
            Command::Itemcf(a) => a.corpus.as_ref(),
            Command::Train(a) => a.corpus.as_ref(),
            Command::Pretrain(a) => a.corpus.as_ref(),
            Command::Mine(a) => a.corpus.as_ref(),
            Command::Finetune(a) => a.corpus.as_ref(),
            Command::Run(a) => a.corpus.as_ref(),
            Command::Evaluate(a) => a.corpus.as_ref(),
            Command::Hdr(a) => a.corpus.as_ref(),
            Command::Ensemble(a) => a.corpus.as_ref(),
        }
    }
}

/// Loads the config file, applies the global flags and `overrides`, validates
/// and logs the result.
fn resolve(cli: &Cli, overrides: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    set!(cfg, seed = cli.seed, threads = cli.threads);
    if let Some(dir) = cli.command.corpus() {
        cfg.corpus = Some(dir.clone());
    }
    overrides(&mut cfg);
    cfg.validate()?;
    eprintln!("wslrec: config {}", cfg.to_json());
    Ok(cfg)
}

fn write_log(path: Option<&Path>, log: &wslrec_core::trainer::TrainingLog) -> Result<()> {
    match path {
        Some(p) => write_text(p, &formats::log_to_jsonl(log)?),
        None => Ok(()),
    }
}

fn load_similarity(path: Option<&Path>, n_items: usize) -> Result<Option<wslrec_core::modelfree::SimilarityTable>> {
    path.map(|p| formats::read_similarity(p, n_items)).transpose()
}

fn corpus_dir(cfg: &RunConfig) -> Result<&Path> {
    cfg.corpus.as_deref().ok_or_else(|| CliError::Config("no corpus: pass --corpus or set the corpus key".into()))
}

fn required<'a>(path: Option<&'a Path>, flag: &str, why: &str) -> Result<&'a Path> {
    path.ok_or_else(|| CliError::Config(format!("{flag} is required {why}")))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => {
            let cfg = resolve(cli, |c| {
                set!(
                    c,
                    users = a.users,
                    items = a.items,
                    clusters = a.clusters,
                    p_in = a.p_in,
                    repeat_prob = a.repeat,
                    min_len = a.min_len,
                    max_len = a.max_len,
                );
            })?;
            let events = synth::generate(&cfg.synth())?;
            write_text(&a.out, &synth::to_tsv(&events))?;
            eprintln!("wslrec: wrote {} events to {}", events.len(), a.out.display());
        }
        Command::Preprocess(a) => {
            let cfg = resolve(cli, |c| {
                set!(c, min_user = a.min_user, min_item = a.min_item);
                if let Some(s) = &a.split {
                    c.split = [s[0], s[1], s[2]];
                }
            })?;
            let events = formats::read_events(&a.input)?;
            let corpus = filter_corpus(&build_sequences(&events), cfg.min_user, cfg.min_item)?;
            let split = split_users(corpus.n_users(), cfg.split, cfg.seed)?;
            formats::write_corpus_dir(&a.out, &corpus, &split)?;
            eprintln!(
                "wslrec: {} users, {} items, split {}/{}/{}",
                corpus.n_users(),
                corpus.n_items(),
                split.train.len(),
                split.valid.len(),
                split.test.len()
            );
        }
        Command::Itemcf(a) => {
            let cfg = resolve(cli, |c| {
                if a.prune.is_some() {
                    c.itemcf_prune = a.prune;
                }
            })?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let table = runner::build_similarity(&cfg, &corpus, &split)?;
            write_text(&a.out, &formats::similarity_to_tsv(&table))?;
        }
        Command::Train(a) => {
            let cfg = resolve(cli, |c| {
                set!(c, strategy = a.strategy);
                c.itemcf_include_history |= a.itemcf_include_history;
                a.model.apply(c);
                a.train.apply(c);
            })?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let sim = load_similarity(a.similarity.as_deref(), corpus.n_items())?;
            let mined = a.mined.as_deref().map(formats::read_mined).transpose()?;
            let init = runner::init_model(&cfg, &corpus)?;
            let (model, log) = runner::train_standard(&cfg, init, &corpus, &split, sim.as_ref(), mined.as_ref())?;
            formats::write_checkpoint(&a.out, &model)?;
            write_log(a.log.as_deref(), &log)?;
        }
        Command::Pretrain(a) => {
            let cfg = resolve(cli, |c| {
                c.itemcf_include_history |= a.itemcf_include_history;
                a.weak.apply(c);
                a.model.apply(c);
                a.train.apply(c);
            })?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let sim = load_similarity(a.similarity.as_deref(), corpus.n_items())?;
            let init = runner::init_model(&cfg, &corpus)?;
            let (model, log) = runner::pretrain(&cfg, init, &corpus, &split, sim.as_ref())?;
            formats::write_checkpoint(&a.out, &model)?;
            write_log(a.log.as_deref(), &log)?;
        }
        Command::Mine(a) => {
            let cfg = resolve(cli, |c| set!(c, mining_k = a.k, max_history = a.max_history))?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let model = formats::read_checkpoint(&a.ckpt)?;
            let mined = runner::mine(&cfg, &model, &corpus, &split)?;
            write_text(&a.out, &formats::mined_to_tsv(&mined))?;
        }
        Command::Finetune(a) => {
            let cfg = resolve(cli, |c| a.train.apply(c))?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let model = formats::read_checkpoint(&a.ckpt)?;
            let mined = formats::read_mined(&a.mined)?;
            let (model, log) = runner::finetune(&cfg, model, &mined, &corpus, &split)?;
            formats::write_checkpoint(&a.out, &model)?;
            write_log(a.log.as_deref(), &log)?;
        }
        Command::Run(a) => {
            let cfg = resolve(cli, |c| {
                c.itemcf_include_history |= a.itemcf_include_history;
                a.weak.apply(c);
                a.model.apply(c);
                a.train.apply(c);
            })?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let sim = load_similarity(a.similarity.as_deref(), corpus.n_items())?;
            let run = runner::run_wslrec(&cfg, &corpus, &split, sim.as_ref())?;
            let out = &a.out;
            write_text(&out.join("config.json"), &(cfg.to_json() + "\n"))?;
            formats::write_checkpoint(&out.join("pretrained.ckpt"), &run.pretrained)?;
            write_text(&out.join("pretrain_log.jsonl"), &formats::log_to_jsonl(&run.pretrain_log)?)?;
            write_text(&out.join("mined.tsv"), &formats::mined_to_tsv(&run.mined))?;
            formats::write_checkpoint(&out.join("finetuned.ckpt"), &run.finetuned)?;
            write_text(&out.join("finetune_log.jsonl"), &formats::log_to_jsonl(&run.finetune_log)?)?;
        }
        Command::Evaluate(a) => {
            let cfg = resolve(cli, |c| {
                set!(c, cutoffs = a.k, max_history = a.max_history);
                c.ndcg_normalized |= a.ndcg_normalized;
                c.itemcf_include_history |= a.itemcf_include_history;
            })?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let users = a.split.users(&split);
            let model;
            let table;
            let rec = match a.method {
                Method::Model => {
                    model = formats::read_checkpoint(required(a.ckpt.as_deref(), "--ckpt", "for --method model")?)?;
                    Recommender::Model { model: &model, max_history: cfg.max_history }
                }
                Method::Br => Recommender::Br,
                Method::Itemcf => {
                    let path = required(a.similarity.as_deref(), "--similarity", "for --method itemcf")?;
                    table = formats::read_similarity(path, corpus.n_items())?;
                    Recommender::ItemCf { table: &table, include_history: cfg.itemcf_include_history }
                }
            };
            let (report, recs) = runner::evaluate(rec, &corpus, users, &cfg.cutoffs, cfg.ndcg_normalized, cfg.threads)?;
            if let Some(p) = &a.out {
                write_text(p, &formats::report_to_json(&report)?)?;
            }
            if let Some(p) = &a.recs {
                write_text(p, &formats::recs_to_tsv(users, &recs))?;
            }
            print!("{}", formats::report_to_table(&report));
        }
        Command::Hdr(a) => {
            let cfg = resolve(cli, |_| {})?;
            let (corpus, _) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let ra = formats::read_recs(&a.rec_a)?;
            let rb = formats::read_recs(&a.rec_b)?;
            let users_a: Vec<UserIdx> = ra.iter().map(|r| r.0).collect();
            let users_b: Vec<UserIdx> = rb.iter().map(|r| r.0).collect();
            if users_a != users_b {
                return Err(CliError::Config("--rec-a and --rec-b list different users".into()));
            }
            let mut values = Vec::with_capacity(ra.len());
            for ((u, la), (_, lb)) in ra.iter().zip(&rb) {
                if *u as usize >= corpus.n_users() {
                    return Err(CliError::Config(format!("user {u} is not in the corpus")));
                }
                let (_, truth) = wslrec_core::corpus::eval_split(corpus.sequence(*u))?;
                values.push(eval::hdr(&HitSet::new(la, &truth, a.k), &HitSet::new(lb, &truth, a.k)));
            }
            let summary = serde_json::json!({
                "k": a.k,
                "users": values.len(),
                "users_with_difference": values.iter().filter(|&&h| h > 0.0).count(),
                "mean_hdr": eval::mean_hdr(&values),
            });
            let text = serde_json::to_string_pretty(&summary)? + "\n";
            if let Some(p) = &a.out {
                write_text(p, &text)?;
            }
            print!("{text}");
        }
        Command::Ensemble(a) => {
            let cfg = resolve(cli, |c| {
                set!(c, max_history = a.max_history);
                c.ndcg_normalized |= a.ndcg_normalized;
                c.itemcf_include_history |= a.itemcf_include_history;
            })?;
            let (corpus, split) = formats::read_corpus_dir(corpus_dir(&cfg)?)?;
            let model = formats::read_checkpoint(&a.ckpt)?;
            let table = formats::read_similarity(&a.similarity, corpus.n_items())?;
            let ((ta, tb, tc), report, recs) = runner::ensemble(&cfg, &model, &table, &corpus, &split, a.k)?;
            if let Some(p) = &a.out {
                write_text(p, &formats::report_to_json(&report)?)?;
            }
            if let Some(p) = &a.recs {
                write_text(p, &formats::recs_to_tsv(&split.test, &recs))?;
            }
            println!("ensemble (a, b, c) = ({ta}, {tb}, {tc})");
            print!("{}", formats::report_to_table(&report));
        }
    }
    Ok(())
}
