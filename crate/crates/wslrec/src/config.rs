//! Flat run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wslrec_core::seed::stage_seed;
use wslrec_core::seqmodel::EncoderKind;
use wslrec_core::synth::SynthConfig;
use wslrec_core::trainer::{self, LabelStrategy, Proposal, TrainConfig, WeakSource};
use wslrec_core::pipeline::WeakSupervisionConfig;

use crate::error::{CliError, Result};
use crate::formats::read_text;

/// Every tunable value. A config file may set any subset of these keys;
/// unknown keys are rejected and command-line flags win over the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    /// Corpus directory used when `--corpus` is not given.
    pub corpus: Option<PathBuf>,

    pub users: usize,
    pub items: usize,
    pub clusters: usize,
    pub p_in: f64,
    pub repeat_prob: f64,
    pub min_len: usize,
    pub max_len: usize,

    pub min_user: usize,
    pub min_item: usize,
    pub split: [u32; 3],

    /// Neighbors kept per item; `null` keeps all.
    pub itemcf_prune: Option<usize>,
    pub itemcf_include_history: bool,

    pub encoder: String,
    pub dim: usize,
    pub heads: usize,

    pub strategy: String,
    pub batch_size: usize,
    pub negatives_per_instance: usize,
    pub negatives_scale_with_batch: bool,
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub patience: usize,
    pub eval_interval: usize,
    pub max_history: usize,

    pub weak_sources: String,
    pub k_ws: usize,
    pub mining_k: usize,

    pub cutoffs: Vec<usize>,
    pub ndcg_normalized: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let train = TrainConfig::default();
        let weak = WeakSupervisionConfig::default();
        Self {
            seed: 0,
            threads: 1,
            corpus: None,
            users: synth.n_users,
            items: synth.n_items,
            clusters: synth.n_clusters,
            p_in: synth.p_in,
            repeat_prob: synth.repeat_prob,
            min_len: synth.min_len,
            max_len: synth.max_len,
            min_user: 5,
            min_item: 5,
            split: [8, 1, 1],
            itemcf_prune: None,
            itemcf_include_history: weak.itemcf_include_history,
            encoder: EncoderKind::Gru.name().into(),
            dim: 64,
            heads: 4,
            strategy: "next1".into(),
            batch_size: train.batch_size,
            negatives_per_instance: train.negatives_per_instance,
            negatives_scale_with_batch: train.negatives_scale_with_batch,
            learning_rate: train.learning_rate,
            max_iterations: train.max_iterations,
            patience: train.patience,
            eval_interval: train.eval_interval,
            max_history: train.max_history,
            weak_sources: "br,itemcf".into(),
            k_ws: weak.k_ws,
            mining_k: weak.mining_k,
            cutoffs: vec![20, 50],
            ndcg_normalized: false,
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the keys of `path`, if given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => serde_json::from_str(&read_text(p)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.threads == 0 {
            return bad("threads must be >= 1".into());
        }
        if self.dim == 0 || self.heads == 0 {
            return bad("dim and heads must be >= 1".into());
        }
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return bad(format!("cutoffs {:?} must be nonempty and positive", self.cutoffs));
        }
        self.encoder_kind()?;
        self.label_strategy()?;
        self.weak()?.validate()?;
        self.train_config("train").validate()?;
        Ok(())
    }

    pub fn encoder_kind(&self) -> Result<EncoderKind> {
        EncoderKind::parse(&self.encoder)
            .ok_or_else(|| CliError::Config(format!("unknown encoder {:?}", self.encoder)))
    }

    /// Vectors per user: `heads` for the multi-head encoder, otherwise 1.
    pub fn user_vectors(&self) -> usize {
        match self.encoder_kind() {
            Ok(EncoderKind::MultiHead) => self.heads,
            _ => 1,
        }
    }

    pub fn label_strategy(&self) -> Result<LabelStrategy> {
        Ok(trainer::parse_strategy(&self.strategy)?)
    }

    pub fn weak(&self) -> Result<WeakSupervisionConfig> {
        let sources: Vec<WeakSource> = trainer::parse_sources(&self.weak_sources)?;
        Ok(WeakSupervisionConfig {
            sources,
            k_ws: self.k_ws,
            mining_k: self.mining_k,
            itemcf_include_history: self.itemcf_include_history,
        })
    }

    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            n_users: self.users,
            n_items: self.items,
            n_clusters: self.clusters,
            p_in: self.p_in,
            repeat_prob: self.repeat_prob,
            min_len: self.min_len,
            max_len: self.max_len,
            seed: self.seed,
        }
    }

    /// Training settings with the RNG seed of the named stage.
    pub fn train_config(&self, stage: &str) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            negatives_per_instance: self.negatives_per_instance,
            negatives_scale_with_batch: self.negatives_scale_with_batch,
            learning_rate: self.learning_rate,
            max_iterations: self.max_iterations,
            patience: self.patience,
            eval_interval: self.eval_interval,
            seed: stage_seed(self.seed, stage),
            max_history: self.max_history,
            proposal: Proposal::Uniform,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_files_keep_defaults_and_unknown_keys_fail() {
        let c: RunConfig = serde_json::from_str(r#"{"dim": 8, "strategy": "nextall"}"#).unwrap();
        assert_eq!((c.dim, c.strategy.as_str(), c.batch_size), (8, "nextall", 256));
        assert!(serde_json::from_str::<RunConfig>(r#"{"dimm": 8}"#).is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        for c in [
            RunConfig { encoder: "lstm".into(), ..Default::default() },
            RunConfig { strategy: "next0".into(), ..Default::default() },
            RunConfig { weak_sources: "br,pop".into(), ..Default::default() },
            RunConfig { weak_sources: String::new(), ..Default::default() },
            RunConfig { cutoffs: vec![], ..Default::default() },
            RunConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
