//! Implicit-feedback corpora: events, behavior sequences, filtering, splits
//! and the instances derived from each sequence.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str;

use rand::seq::SliceRandom;

use crate::{seed, Error, ItemIdx, Result, UserIdx};

/// Smallest sequence length that yields a training instance.
pub const MIN_SEQUENCE_LEN: usize = 5;
/// First split index `t` (1-based) of a training instance.
pub const FIRST_SPLIT: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionEvent {
    pub user: String,
    pub item: String,
    pub timestamp: u64,
}

/// Parses `user<TAB>item<TAB>timestamp` records, one per line.
///
/// Blank lines are skipped. Line numbers in errors are 1-based.
pub fn parse_events(source: &[u8]) -> Result<Vec<InteractionEvent>> {
    let mut events = Vec::new();
    for (i, raw) in source.split(|&b| b == b'\n').enumerate() {
        let line_no = i + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if raw.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse { line: line_no, message };
        let line = str::from_utf8(raw).map_err(|e| perr(format!("invalid UTF-8: {e}")))?;
        let mut fields = line.split('\t');
        let (Some(user), Some(item), Some(ts), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(perr("expected 3 tab-separated fields".to_owned()));
        };
        if user.is_empty() || item.is_empty() {
            return Err(perr("empty user or item id".to_owned()));
        }
        let timestamp = ts
            .trim()
            .parse::<u64>()
            .map_err(|_| perr(format!("timestamp {ts:?} is not a non-negative integer")))?;
        events.push(InteractionEvent { user: user.to_owned(), item: item.to_owned(), timestamp });
    }
    Ok(events)
}

/// A user's time-ordered items before filtering, still in external ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSequence {
    pub user: String,
    pub items: Vec<String>,
}

/// Groups events per user (users in first-appearance order) and sorts each
/// group by timestamp. The sort is stable, so equal timestamps keep input order.
pub fn build_sequences(events: &[InteractionEvent]) -> Vec<RawSequence> {
    let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
    let mut groups: Vec<(&str, Vec<(u64, &str)>)> = Vec::new();
    for ev in events {
        let idx = *slot.entry(ev.user.as_str()).or_insert_with(|| {
            groups.push((ev.user.as_str(), Vec::new()));
            groups.len() - 1
        });
        groups[idx].1.push((ev.timestamp, ev.item.as_str()));
    }
    groups
        .into_iter()
        .map(|(user, mut items)| {
            items.sort_by_key(|&(ts, _)| ts);
            RawSequence {
                user: user.to_owned(),
                items: items.into_iter().map(|(_, it)| it.to_owned()).collect(),
            }
        })
        .collect()
}

/// Bidirectional external id <-> dense index mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<String>,
    lookup: BTreeMap<String, u32>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `id`, assigning the next free one if unseen.
    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.lookup.get(id) {
            return i;
        }
        let i = self.external.len() as u32;
        self.external.push(id.to_owned());
        self.lookup.insert(id.to_owned(), i);
        i
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.lookup.get(id).copied()
    }

    pub fn external(&self, index: u32) -> Option<&str> {
        self.external.get(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    /// `(external id, index)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.external.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorSequence {
    pub user: UserIdx,
    pub items: Vec<ItemIdx>,
}

impl BehaviorSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// A filtered corpus with dense indices. `sequences[u].user == u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    users: IdMap,
    items: IdMap,
    sequences: Vec<BehaviorSequence>,
}

impl Corpus {
    /// Assembles a corpus from already-indexed parts, checking that indices
    /// are consistent with the mappings.
    pub fn from_parts(users: IdMap, items: IdMap, sequences: Vec<BehaviorSequence>) -> Result<Self> {
        if sequences.len() != users.len() {
            return Err(Error::Dimension(format!(
                "{} sequences for {} users",
                sequences.len(),
                users.len()
            )));
        }
        for (u, seq) in sequences.iter().enumerate() {
            if seq.user as usize != u {
                return Err(Error::Dimension(format!("sequence {u} is labelled user {}", seq.user)));
            }
            if seq.items.is_empty() {
                return Err(Error::SequenceTooShort { user: seq.user, len: 0, min: 1 });
            }
            if let Some(&bad) = seq.items.iter().find(|&&v| v as usize >= items.len()) {
                return Err(Error::ItemOutOfRange { item: bad, n_items: items.len() });
            }
        }
        Ok(Self { users, items, sequences })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn users(&self) -> &IdMap {
        &self.users
    }

    pub fn items(&self) -> &IdMap {
        &self.items
    }

    pub fn sequences(&self) -> &[BehaviorSequence] {
        &self.sequences
    }

    pub fn sequence(&self, user: UserIdx) -> &BehaviorSequence {
        &self.sequences[user as usize]
    }
}

/// Drops short users and rare items, repeating until neither condition
/// removes anything.
///
/// A user survives with at least `min_user_len` surviving interactions
/// (repeats count); an item survives with at least `min_item_users` distinct
/// surviving users. Dense indices follow first appearance over the survivors.
pub fn filter_corpus(raw: &[RawSequence], min_user_len: usize, min_item_users: usize) -> Result<Corpus> {
    let mut scratch = IdMap::new();
    let seqs: Vec<Vec<u32>> =
        raw.iter().map(|s| s.items.iter().map(|it| scratch.intern(it)).collect()).collect();
    let n_items = scratch.len();

    let mut user_alive: Vec<bool> = alloc::vec![true; seqs.len()];
    let mut item_alive: Vec<bool> = alloc::vec![true; n_items];
    let mut last_user = alloc::vec![usize::MAX; n_items];
    let mut item_users = alloc::vec![0usize; n_items];
    loop {
        let mut changed = false;
        for (u, seq) in seqs.iter().enumerate() {
            if user_alive[u] {
                let len = seq.iter().filter(|&&v| item_alive[v as usize]).count();
                if len < min_user_len {
                    user_alive[u] = false;
                    changed = true;
                }
            }
        }
        item_users.iter_mut().for_each(|c| *c = 0);
        last_user.iter_mut().for_each(|c| *c = usize::MAX);
        for (u, seq) in seqs.iter().enumerate().filter(|(u, _)| user_alive[*u]) {
            for &v in seq {
                let v = v as usize;
                if last_user[v] != u {
                    last_user[v] = u;
                    item_users[v] += 1;
                }
            }
        }
        for v in 0..n_items {
            if item_alive[v] && item_users[v] < min_item_users {
                item_alive[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut sequences = Vec::new();
    for (u, seq) in seqs.iter().enumerate().filter(|(u, _)| user_alive[*u]) {
        let user = users.intern(&raw[u].user);
        let kept = seq
            .iter()
            .filter(|&&v| item_alive[v as usize])
            .map(|&v| items.intern(scratch.external(v).expect("interned")))
            .collect();
        sequences.push(BehaviorSequence { user, items: kept });
    }
    if sequences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Corpus { users, items, sequences })
}

/// Disjoint train/validation/test user sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitCorpus {
    pub train: Vec<UserIdx>,
    pub valid: Vec<UserIdx>,
    pub test: Vec<UserIdx>,
}

/// Seeded uniform shuffle of all users followed by contiguous cuts at
/// `floor(n * r0 / R)` and `floor(n * (r0 + r1) / R)`.
pub fn split_users(n_users: usize, ratios: [u32; 3], seed: u64) -> Result<SplitCorpus> {
    if n_users < ratios.len() {
        return Err(Error::TooFewUsers { users: n_users, partitions: ratios.len() });
    }
    let total: u64 = ratios.iter().map(|&r| r as u64).sum();
    if total == 0 {
        return Err(Error::InvalidConfig("split ratios sum to zero".to_owned()));
    }
    let mut order: Vec<UserIdx> = (0..n_users as UserIdx).collect();
    order.shuffle(&mut seed::stage_rng(seed, "split"));
    let cut1 = (n_users as u64 * ratios[0] as u64 / total) as usize;
    let cut2 = (n_users as u64 * (ratios[0] + ratios[1]) as u64 / total) as usize;
    let part = |s: &[UserIdx]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(SplitCorpus {
        train: part(&order[..cut1]),
        valid: part(&order[cut1..cut2]),
        test: part(&order[cut2..]),
    })
}

/// One `(X_{u,t}, Y_{u,t})` pair. `t` is the 1-based position of the last
/// history item, so the next item is `items[t]` in 0-based terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstance<'a> {
    pub user: UserIdx,
    pub t: usize,
    /// The most recent `min(t, max_history)` items up to and including `t`.
    pub history: &'a [ItemIdx],
    pub next_item: ItemIdx,
    /// `Y_{u,t}`: the items after `t`, in order.
    pub upcoming: &'a [ItemIdx],
    /// Distinct items of `upcoming`, sorted ascending.
    pub future: Vec<ItemIdx>,
}

impl TrainingInstance<'_> {
    pub fn key(&self) -> (UserIdx, usize) {
        (self.user, self.t)
    }
}

pub struct TrainingInstances<'a> {
    seq: &'a BehaviorSequence,
    max_history: usize,
    t: usize,
}

impl<'a> Iterator for TrainingInstances<'a> {
    type Item = TrainingInstance<'a>;

    fn next(&mut self) -> Option<Self::Item> {
        let items = &self.seq.items;
        if self.t >= items.len() {
            return None;
        }
        let t = self.t;
        self.t += 1;
        Some(instance_at(self.seq, t, self.max_history))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.seq.items.len().saturating_sub(self.t);
        (n, Some(n))
    }
}

impl ExactSizeIterator for TrainingInstances<'_> {}

/// The instance of `seq` split after the 1-based position `t`
/// (`1 <= t < n_u`).
pub fn instance_at(seq: &BehaviorSequence, t: usize, max_history: usize) -> TrainingInstance<'_> {
    let items = &seq.items;
    TrainingInstance {
        user: seq.user,
        t,
        history: recent(&items[..t], max_history),
        next_item: items[t],
        upcoming: &items[t..],
        future: sorted_set(&items[t..]),
    }
}

/// The `n_u - 4` instances of a sequence, `t = 4 ..= n_u - 1`.
pub fn training_instances(seq: &BehaviorSequence, max_history: usize) -> Result<TrainingInstances<'_>> {
    if seq.len() < MIN_SEQUENCE_LEN {
        return Err(Error::SequenceTooShort { user: seq.user, len: seq.len(), min: MIN_SEQUENCE_LEN });
    }
    if max_history == 0 {
        return Err(Error::InvalidConfig("max_history must be positive".to_owned()));
    }
    Ok(TrainingInstances { seq, max_history, t: FIRST_SPLIT })
}

/// Evaluation split: the first `floor(0.8 n_u)` items as history and the
/// distinct remaining items (sorted) as ground truth.
pub fn eval_split(seq: &BehaviorSequence) -> Result<(&[ItemIdx], Vec<ItemIdx>)> {
    if seq.len() < MIN_SEQUENCE_LEN {
        return Err(Error::SequenceTooShort { user: seq.user, len: seq.len(), min: MIN_SEQUENCE_LEN });
    }
    let cut = seq.len() * 4 / 5;
    Ok((&seq.items[..cut], sorted_set(&seq.items[cut..])))
}

/// The last `max_len` elements of `history`.
pub fn recent(history: &[ItemIdx], max_len: usize) -> &[ItemIdx] {
    &history[history.len().saturating_sub(max_len)..]
}

pub(crate) fn sorted_set(items: &[ItemIdx]) -> Vec<ItemIdx> {
    let mut v = items.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

impl core::fmt::Display for SplitCorpus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}/{}", self.train.len(), self.valid.len(), self.test.len())
    }
}
