//! Weakly supervised training for neural sequential recommenders.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the algorithmic
//! parts of the pipeline:
//!
//! * [`corpus`]: event parsing, behavior sequences, filtering, user splits and
//!   training/evaluation instances.
//! * [`modelfree`]: behavioral retargeting and item-based collaborative
//!   filtering, the two weak-supervision sources.
//! * [`seqmodel`]: the trainable scorer (item embeddings plus a sequence
//!   encoder), exact top-k retrieval and the binary checkpoint codec.
//! * [`trainer`]: positive-label strategies, sampled softmax with hand-written
//!   reverse-mode gradients, Adam and the early-stopping training loop.
//! * [`pipeline`]: pre-train, top-k mining and fine-tuning, and the ensemble
//!   baseline.
//! * [`eval`]: per-user averaged retrieval metrics and the hits difference rate.
//! * [`synth`]: seeded planted-cluster corpora.
//!
//! File IO, configuration and the command line live in the `wslrec` crate.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod eval;
pub mod modelfree;
pub mod pipeline;
pub mod seed;
pub mod seqmodel;
pub mod synth;
pub mod trainer;

mod topk;

pub use error::{Error, Result};

/// Dense internal user index.
pub type UserIdx = u32;
/// Dense internal item index.
pub type ItemIdx = u32;
