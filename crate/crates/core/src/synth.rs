//! Seeded planted-cluster corpora.
//!
//! Items are split into equally sized clusters. Each user walks a Markov
//! chain: with probability `repeat_prob` they re-consume one of their last
//! five items; otherwise they stay in their current cluster with probability
//! `p_in` (or jump to a uniformly chosen other cluster) and consume a uniform
//! item of that cluster.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::InteractionEvent;
use crate::seed::stage_seed;
use crate::{Error, ItemIdx, Result};

/// Window of recent items a repeat is drawn from.
pub const REPEAT_WINDOW: usize = 5;
/// Timestamp of every user's first event.
pub const BASE_TIMESTAMP: u64 = 1_500_000_000;
/// Seconds between consecutive events of a user.
pub const EVENT_SPACING: u64 = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub n_clusters: usize,
    pub p_in: f64,
    pub repeat_prob: f64,
    /// Inclusive range of sequence lengths.
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 1000,
            n_items: 500,
            n_clusters: 10,
            p_in: 0.8,
            repeat_prob: 0.3,
            min_len: 10,
            max_len: 30,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_users == 0 || self.n_items == 0 || self.n_clusters == 0 {
            return bad("users, items and clusters must be positive".into());
        }
        if self.n_items % self.n_clusters != 0 {
            return bad(format!("{} items do not split into {} clusters", self.n_items, self.n_clusters));
        }
        if !(self.p_in > 0.0 && self.p_in <= 1.0) {
            return bad(format!("p_in {} outside (0, 1]", self.p_in));
        }
        if self.n_clusters > 1 && self.p_in <= 1.0 / self.n_clusters as f64 {
            return bad(format!("p_in {} gives no cluster structure for {} clusters", self.p_in, self.n_clusters));
        }
        if !(0.0..1.0).contains(&self.repeat_prob) {
            return bad(format!("repeat_prob {} outside [0, 1)", self.repeat_prob));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!("bad length range {}..={}", self.min_len, self.max_len));
        }
        Ok(())
    }

    pub fn cluster_size(&self) -> usize {
        self.n_items / self.n_clusters
    }

    pub fn cluster_of(&self, item: ItemIdx) -> usize {
        item as usize / self.cluster_size()
    }
}

/// One step of a user's walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthStep {
    pub item: ItemIdx,
    /// `None` for repeats, otherwise whether the walk stayed in its cluster.
    /// The first fresh step of a user counts as staying.
    pub stayed: Option<bool>,
}

/// The walk of every user, in user order.
pub fn generate_trace(config: &SynthConfig) -> Result<Vec<Vec<SynthStep>>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(config.seed, "synth"));
    let size = config.cluster_size();
    let mut users = Vec::with_capacity(config.n_users);
    for _ in 0..config.n_users {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let mut cluster = rng.gen_range(0..config.n_clusters);
        let mut steps: Vec<SynthStep> = Vec::with_capacity(len);
        for _ in 0..len {
            if !steps.is_empty() && rng.gen_bool(config.repeat_prob) {
                let window = &steps[steps.len().saturating_sub(REPEAT_WINDOW)..];
                let item = window[rng.gen_range(0..window.len())].item;
                steps.push(SynthStep { item, stayed: None });
                continue;
            }
            let stayed = steps.is_empty() || config.n_clusters == 1 || rng.gen_bool(config.p_in);
            if !stayed {
                // uniform over the other clusters
                let other = rng.gen_range(0..config.n_clusters - 1);
                cluster = if other >= cluster { other + 1 } else { other };
            }
            let item = (cluster * size + rng.gen_range(0..size)) as ItemIdx;
            steps.push(SynthStep { item, stayed: Some(stayed) });
        }
        users.push(steps);
    }
    Ok(users)
}

/// Events with user ids `u<index>`, item ids `i<index>` and strictly
/// increasing timestamps per user.
pub fn generate(config: &SynthConfig) -> Result<Vec<InteractionEvent>> {
    let trace = generate_trace(config)?;
    let mut events = Vec::new();
    for (u, steps) in trace.iter().enumerate() {
        for (i, step) in steps.iter().enumerate() {
            events.push(InteractionEvent {
                user: format!("u{u}"),
                item: format!("i{}", step.item),
                timestamp: BASE_TIMESTAMP + EVENT_SPACING * i as u64,
            });
        }
    }
    Ok(events)
}

/// Renders events in the `user<TAB>item<TAB>timestamp` format.
pub fn to_tsv(events: &[InteractionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = writeln!(out, "{}\t{}\t{}", e.user, e.item, e.timestamp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        let bad = [
            SynthConfig { n_items: 501, ..Default::default() },
            SynthConfig { p_in: 0.1, ..Default::default() },
            SynthConfig { repeat_prob: 1.0, ..Default::default() },
            SynthConfig { min_len: 9, max_len: 3, ..Default::default() },
        ];
        for c in bad {
            assert!(generate(&c).is_err(), "{c:?}");
        }
        let single = SynthConfig { n_clusters: 1, p_in: 0.5, ..Default::default() };
        assert!(single.validate().is_ok());
    }

    #[test]
    fn deterministic_and_parseable() {
        let cfg = SynthConfig { n_users: 20, n_items: 40, n_clusters: 4, seed: 3, ..Default::default() };
        let a = to_tsv(&generate(&cfg).unwrap());
        assert_eq!(a, to_tsv(&generate(&cfg).unwrap()));
        let parsed = crate::corpus::parse_events(a.as_bytes()).unwrap();
        assert_eq!(parsed, generate(&cfg).unwrap());
        for w in parsed.windows(2) {
            if w[0].user == w[1].user {
                assert!(w[1].timestamp > w[0].timestamp);
            }
        }
    }
}
