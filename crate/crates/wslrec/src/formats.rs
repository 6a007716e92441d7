//! On-disk artifacts.
//!
//! | artifact        | layout                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | events          | `user<TAB>item<TAB>timestamp`                                 |
//! | corpus dir      | `users.tsv`, `items.tsv` (`external<TAB>index`), `sequences.tsv` (`user<TAB>item,item,...`), `split.tsv` (`user<TAB>train\|valid\|test`) |
//! | similarity      | `item<TAB>item<TAB>sim`, rows in stored rank order             |
//! | checkpoint      | binary, see [`SequenceScorer::to_bytes`]                      |
//! | mined table     | `user<TAB>t<TAB>item,item,...`                                 |
//! | training log    | JSON lines `{iter, loss_avg, recall50_val, best}`             |
//! | report          | JSON `{k: {precision, recall, f1, ndcg, hit_rate}}`           |
//! | recommendations | `user<TAB>item,item,...`                                       |
//!
//! All indices are the dense internal ones; floats are written in their
//! shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wslrec_core::corpus::{self, BehaviorSequence, Corpus, IdMap, InteractionEvent, SplitCorpus};
use wslrec_core::eval::{CutoffMetrics, EvalReport};
use wslrec_core::modelfree::SimilarityTable;
use wslrec_core::pipeline::MinedLabelTable;
use wslrec_core::seqmodel::SequenceScorer;
use wslrec_core::trainer::{LogRecord, TrainingLog};
use wslrec_core::{ItemIdx, UserIdx};

use crate::error::{format_err, invalid, io_err, CliError, Result};

pub const USERS_FILE: &str = "users.tsv";
pub const ITEMS_FILE: &str = "items.tsv";
pub const SEQUENCES_FILE: &str = "sequences.tsv";
pub const SPLIT_FILE: &str = "split.tsv";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Lines with their 1-based numbers, skipping blank ones.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, field: &str, what: &str) -> Result<T> {
    field.parse().map_err(|_| format_err(path, line, format!("bad {what} {field:?}")))
}

fn parse_list<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<Vec<T>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field.split(',').map(|f| parse_num(path, line, f, "index")).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

// ---- events ----

pub fn read_events(path: &Path) -> Result<Vec<InteractionEvent>> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    corpus::parse_events(&bytes).map_err(|e| match e {
        wslrec_core::Error::Parse { line, message } => format_err(path, line, message),
        other => other.into(),
    })
}

// ---- corpus directory ----

fn write_idmap(path: &Path, map: &IdMap) -> Result<()> {
    let mut out = String::new();
    for (id, idx) in map.iter() {
        let _ = writeln!(out, "{id}\t{idx}");
    }
    write_text(path, &out)
}

fn read_idmap(path: &Path) -> Result<IdMap> {
    let text = read_text(path)?;
    let mut map = IdMap::new();
    for (n, line) in lines(&text) {
        let (id, idx) = line.split_once('\t').ok_or_else(|| format_err(path, n, "expected id<TAB>index"))?;
        let idx: u32 = parse_num(path, n, idx, "index")?;
        if idx as usize != map.len() || map.index_of(id).is_some() {
            return Err(format_err(path, n, format!("index {idx} out of sequence for {id:?}")));
        }
        map.intern(id);
    }
    Ok(map)
}

pub fn write_corpus_dir(dir: &Path, corpus: &Corpus, split: &SplitCorpus) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_idmap(&dir.join(USERS_FILE), corpus.users())?;
    write_idmap(&dir.join(ITEMS_FILE), corpus.items())?;
    let mut seqs = String::new();
    for s in corpus.sequences() {
        let _ = writeln!(seqs, "{}\t{}", s.user, join(&s.items));
    }
    write_text(&dir.join(SEQUENCES_FILE), &seqs)?;
    let mut parts: Vec<(UserIdx, &str)> = Vec::with_capacity(corpus.n_users());
    parts.extend(split.train.iter().map(|&u| (u, "train")));
    parts.extend(split.valid.iter().map(|&u| (u, "valid")));
    parts.extend(split.test.iter().map(|&u| (u, "test")));
    parts.sort_unstable();
    let mut out = String::new();
    for (u, p) in parts {
        let _ = writeln!(out, "{u}\t{p}");
    }
    write_text(&dir.join(SPLIT_FILE), &out)
}

pub fn read_corpus_dir(dir: &Path) -> Result<(Corpus, SplitCorpus)> {
    let users = read_idmap(&dir.join(USERS_FILE))?;
    let items = read_idmap(&dir.join(ITEMS_FILE))?;
    let path = dir.join(SEQUENCES_FILE);
    let text = read_text(&path)?;
    let mut sequences = Vec::with_capacity(users.len());
    for (n, line) in lines(&text) {
        let (u, list) = line.split_once('\t').ok_or_else(|| format_err(&path, n, "expected user<TAB>items"))?;
        let user: UserIdx = parse_num(&path, n, u, "user index")?;
        sequences.push(BehaviorSequence { user, items: parse_list(&path, n, list)? });
    }
    let corpus = Corpus::from_parts(users, items, sequences)?;

    let path = dir.join(SPLIT_FILE);
    let text = read_text(&path)?;
    let mut split = SplitCorpus { train: vec![], valid: vec![], test: vec![] };
    let mut seen = vec![false; corpus.n_users()];
    for (n, line) in lines(&text) {
        let (u, part) = line.split_once('\t').ok_or_else(|| format_err(&path, n, "expected user<TAB>part"))?;
        let user: UserIdx = parse_num(&path, n, u, "user index")?;
        if user as usize >= corpus.n_users() {
            return Err(format_err(&path, n, format!("user {user} not in corpus")));
        }
        if std::mem::replace(&mut seen[user as usize], true) {
            return Err(format_err(&path, n, format!("user {user} assigned twice")));
        }
        match part {
            "train" => split.train.push(user),
            "valid" => split.valid.push(user),
            "test" => split.test.push(user),
            other => return Err(format_err(&path, n, format!("unknown partition {other:?}"))),
        }
    }
    let assigned = split.train.len() + split.valid.len() + split.test.len();
    if assigned != corpus.n_users() {
        return Err(invalid(&path, format!("{assigned} users assigned, corpus has {}", corpus.n_users())));
    }
    Ok((corpus, split))
}

// ---- similarity ----

pub fn similarity_to_tsv(table: &SimilarityTable) -> String {
    let mut out = String::new();
    for (a, row) in table.rows().iter().enumerate() {
        for &(b, s) in row {
            let _ = writeln!(out, "{a}\t{b}\t{s}");
        }
    }
    out
}

pub fn read_similarity(path: &Path, n_items: usize) -> Result<SimilarityTable> {
    let text = read_text(path)?;
    let mut rows: Vec<Vec<(ItemIdx, f64)>> = vec![Vec::new(); n_items];
    for (n, line) in lines(&text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(format_err(path, n, "expected item<TAB>item<TAB>sim"));
        }
        let a: usize = parse_num(path, n, f[0], "item")?;
        let row = rows.get_mut(a).ok_or_else(|| format_err(path, n, format!("item {a} beyond {n_items} items")))?;
        row.push((parse_num(path, n, f[1], "item")?, parse_num(path, n, f[2], "similarity")?));
    }
    Ok(SimilarityTable::from_rows(rows)?)
}

// ---- checkpoints ----

pub fn write_checkpoint(path: &Path, model: &SequenceScorer) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, model.to_bytes()).map_err(io_err(path))
}

pub fn read_checkpoint(path: &Path) -> Result<SequenceScorer> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    SequenceScorer::from_bytes(&bytes).map_err(|e| match e {
        wslrec_core::Error::Checkpoint(m) => invalid(path, m),
        other => other.into(),
    })
}

// ---- mined tables ----

pub fn mined_to_tsv(table: &MinedLabelTable) -> String {
    let mut out = String::new();
    for (u, t, items) in table.iter() {
        let _ = writeln!(out, "{u}\t{t}\t{}", join(items));
    }
    out
}

/// `k` is taken as the largest stored set.
pub fn read_mined(path: &Path) -> Result<MinedLabelTable> {
    let text = read_text(path)?;
    let mut entries = Vec::new();
    for (n, line) in lines(&text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(format_err(path, n, "expected user<TAB>t<TAB>items"));
        }
        let u: UserIdx = parse_num(path, n, f[0], "user")?;
        let t: usize = parse_num(path, n, f[1], "split index")?;
        entries.push((u, t, parse_list::<ItemIdx>(path, n, f[2])?));
    }
    let k = entries.iter().map(|e| e.2.len()).max().unwrap_or(0).max(1);
    let mut table = MinedLabelTable::new(k);
    for (u, t, items) in entries {
        table.insert(u, t, items);
    }
    Ok(table)
}

// ---- training logs ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub iter: usize,
    pub loss_avg: Option<f64>,
    pub recall50_val: f64,
    pub best: bool,
}

impl From<&LogRecord> for LogLine {
    fn from(r: &LogRecord) -> Self {
        Self { iter: r.iter, loss_avg: r.loss_avg, recall50_val: r.recall50_val, best: r.best }
    }
}

pub fn log_to_jsonl(log: &TrainingLog) -> Result<String> {
    let mut out = String::new();
    for r in &log.records {
        out.push_str(&serde_json::to_string(&LogLine::from(r))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<LogLine>> {
    let text = read_text(path)?;
    lines(&text)
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| format_err(path, n, e.to_string())))
        .collect()
}

// ---- reports ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsJson {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ndcg: f64,
    pub hit_rate: f64,
}

impl From<&CutoffMetrics> for MetricsJson {
    fn from(m: &CutoffMetrics) -> Self {
        Self { precision: m.precision, recall: m.recall, f1: m.f1, ndcg: m.ndcg, hit_rate: m.hit_rate }
    }
}

pub fn report_to_json(report: &EvalReport) -> Result<String> {
    let mut map = serde_json::Map::new();
    for (k, m) in &report.cutoffs {
        map.insert(k.to_string(), serde_json::to_value(MetricsJson::from(m))?);
    }
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(map))? + "\n")
}

pub fn report_to_table(report: &EvalReport) -> String {
    let mut out = format!(
        "{:>6}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}\n",
        "k", "precision", "recall", "f1", "ndcg", "hit_rate"
    );
    for (k, m) in &report.cutoffs {
        let _ = writeln!(
            out,
            "{k:>6}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}",
            m.precision, m.recall, m.f1, m.ndcg, m.hit_rate
        );
    }
    let _ = writeln!(out, "users: {}", report.users);
    out
}

// ---- recommendation lists ----

pub fn recs_to_tsv(users: &[UserIdx], recs: &[Vec<ItemIdx>]) -> String {
    let mut out = String::new();
    for (u, r) in users.iter().zip(recs) {
        let _ = writeln!(out, "{u}\t{}", join(r));
    }
    out
}

pub fn read_recs(path: &Path) -> Result<Vec<(UserIdx, Vec<ItemIdx>)>> {
    let text = read_text(path)?;
    lines(&text)
        .map(|(n, line)| {
            let (u, list) = line.split_once('\t').ok_or_else(|| format_err(path, n, "expected user<TAB>items"))?;
            Ok((parse_num(path, n, u, "user")?, parse_list(path, n, list)?))
        })
        .collect::<Result<Vec<_>, CliError>>()
}
