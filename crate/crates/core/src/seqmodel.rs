//! The trainable scorer `f(history, v) = max_j <E_v, h_j(history)>`.
//!
//! All parameters live in one flat `f64` buffer so the optimizer and the
//! checkpoint codec can treat them uniformly. Layout, in order:
//!
//! 1. item embeddings `E`, `n_items x dim`, row-major;
//! 2. encoder parameters:
//!    * `MeanPool`: none;
//!    * `Gru`: `W_z, U_z, b_z, W_r, U_r, b_r, W_h, U_h, b_h` where every `W`/`U`
//!      is `dim x dim` row-major (output index major) and every `b` has `dim`
//!      entries;
//!    * `MultiHead`: `heads` query vectors of `dim` entries each.
//!
//! Gradients use the same layout.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topk::select_topk;
use crate::{Error, ItemIdx, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderKind {
    /// Mean of the history embeddings.
    MeanPool,
    /// Single-layer GRU with hidden size `dim`; the last hidden state is the
    /// user vector.
    Gru,
    /// `heads` attention-pooling heads, each with its own query vector.
    MultiHead,
}

impl EncoderKind {
    pub fn tag(self) -> u8 {
        match self {
            EncoderKind::MeanPool => 0,
            EncoderKind::Gru => 1,
            EncoderKind::MultiHead => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(EncoderKind::MeanPool),
            1 => Some(EncoderKind::Gru),
            2 => Some(EncoderKind::MultiHead),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::MeanPool => "meanpool",
            EncoderKind::Gru => "gru",
            EncoderKind::MultiHead => "multihead",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "meanpool" => Some(EncoderKind::MeanPool),
            "gru" => Some(EncoderKind::Gru),
            "multihead" => Some(EncoderKind::MultiHead),
            _ => None,
        }
    }
}

/// The `m` user vectors produced by an encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRepresentation {
    dim: usize,
    data: Vec<f64>,
}

impl UserRepresentation {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0);
        Self { dim, data }
    }

    pub fn heads(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

// GRU block order inside the encoder parameters.
const GRU_WZ: usize = 0;
const GRU_UZ: usize = 1;
const GRU_BZ: usize = 2;
const GRU_WR: usize = 3;
const GRU_UR: usize = 4;
const GRU_BR: usize = 5;
const GRU_WH: usize = 6;
const GRU_UH: usize = 7;
const GRU_BH: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceScorer {
    n_items: usize,
    dim: usize,
    kind: EncoderKind,
    heads: usize,
    params: Vec<f64>,
}

impl SequenceScorer {
    /// Number of encoder parameters for the given shape.
    pub fn encoder_len(kind: EncoderKind, dim: usize, heads: usize) -> usize {
        match kind {
            EncoderKind::MeanPool => 0,
            EncoderKind::Gru => 3 * (2 * dim * dim + dim),
            EncoderKind::MultiHead => heads * dim,
        }
    }

    fn check_shape(n_items: usize, dim: usize, kind: EncoderKind, heads: usize) -> Result<()> {
        if n_items == 0 || dim == 0 {
            return Err(Error::Dimension(format!("n_items={n_items}, dim={dim} must be positive")));
        }
        match kind {
            EncoderKind::MultiHead if heads == 0 => {
                Err(Error::Dimension("multihead encoder needs at least one head".into()))
            }
            EncoderKind::MeanPool | EncoderKind::Gru if heads != 1 => {
                Err(Error::Dimension(format!("{} encoder has exactly one head", kind.name())))
            }
            _ => Ok(()),
        }
    }

    /// Uniform(-1/sqrt(dim), 1/sqrt(dim)) initialization; GRU biases start at 0.
    pub fn new(n_items: usize, dim: usize, kind: EncoderKind, heads: usize, seed: u64) -> Result<Self> {
        Self::check_shape(n_items, dim, kind, heads)?;
        let bound = 1.0 / libm::sqrt(dim as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = n_items * dim + Self::encoder_len(kind, dim, heads);
        let mut params: Vec<f64> = (0..total).map(|_| rng.gen_range(-bound..bound)).collect();
        if kind == EncoderKind::Gru {
            let base = n_items * dim;
            for block in [GRU_BZ, GRU_BR, GRU_BH] {
                let off = base + gru_offset(dim, block);
                params[off..off + dim].iter_mut().for_each(|p| *p = 0.0);
            }
        }
        Ok(Self { n_items, dim, kind, heads, params })
    }

    /// Wraps an explicit parameter buffer in the documented layout.
    pub fn from_params(n_items: usize, dim: usize, kind: EncoderKind, heads: usize, params: Vec<f64>) -> Result<Self> {
        Self::check_shape(n_items, dim, kind, heads)?;
        let expected = n_items * dim + Self::encoder_len(kind, dim, heads);
        if params.len() != expected {
            return Err(Error::Dimension(format!("expected {expected} parameters, got {}", params.len())));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i} is {}", params[i])));
        }
        Ok(Self { n_items, dim, kind, heads, params })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn embedding(&self, item: ItemIdx) -> &[f64] {
        let i = item as usize;
        &self.params[i * self.dim..(i + 1) * self.dim]
    }

    fn encoder(&self) -> &[f64] {
        &self.params[self.n_items * self.dim..]
    }

    /// Fails unless the model was built for a vocabulary of `n_items`.
    pub fn bind(&self, n_items: usize) -> Result<()> {
        if self.n_items != n_items {
            return Err(Error::Dimension(format!(
                "model has {} items, corpus has {n_items}",
                self.n_items
            )));
        }
        Ok(())
    }

    pub(crate) fn check_history(&self, history: &[ItemIdx]) -> Result<()> {
        if history.is_empty() {
            return Err(Error::EmptyHistory);
        }
        match history.iter().find(|&&v| v as usize >= self.n_items) {
            Some(&item) => Err(Error::ItemOutOfRange { item, n_items: self.n_items }),
            None => Ok(()),
        }
    }

    pub fn encode(&self, history: &[ItemIdx]) -> Result<UserRepresentation> {
        self.check_history(history)?;
        Ok(self.forward(history).0)
    }

    /// `max_j <E_item, h_j>`.
    pub fn score(&self, rep: &UserRepresentation, item: ItemIdx) -> Result<f64> {
        if item as usize >= self.n_items {
            return Err(Error::ItemOutOfRange { item, n_items: self.n_items });
        }
        Ok(self.score_unchecked(rep, item).0)
    }

    /// Score and the index of the maximizing head (first on ties).
    pub(crate) fn score_unchecked(&self, rep: &UserRepresentation, item: ItemIdx) -> (f64, usize) {
        let e = self.embedding(item);
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, h) in rep.vectors().enumerate() {
            let s = dot(e, h);
            if s > best.0 {
                best = (s, j);
            }
        }
        best
    }

    pub fn scores_all(&self, rep: &UserRepresentation) -> Vec<f64> {
        (0..self.n_items as ItemIdx).map(|v| self.score_unchecked(rep, v).0).collect()
    }

    /// Exact top-`k` items by score, best first, ties to the smaller index.
    /// Items in `exclude` are skipped; fewer than `k` come back when the
    /// remaining vocabulary is smaller.
    pub fn topk_items(&self, history: &[ItemIdx], k: usize, exclude: &[ItemIdx]) -> Result<Vec<ItemIdx>> {
        let rep = self.encode(history)?;
        Ok(self.topk_from_rep(&rep, k, exclude))
    }

    pub fn topk_from_rep(&self, rep: &UserRepresentation, k: usize, exclude: &[ItemIdx]) -> Vec<ItemIdx> {
        let mut skip = vec![false; self.n_items];
        for &v in exclude {
            if let Some(s) = skip.get_mut(v as usize) {
                *s = true;
            }
        }
        let scored: Vec<(ItemIdx, f64)> = (0..self.n_items as ItemIdx)
            .filter(|&v| !skip[v as usize])
            .map(|v| (v, self.score_unchecked(rep, v).0))
            .collect();
        select_topk(scored, k).into_iter().map(|p| p.0).collect()
    }

    /// Full softmax over the vocabulary (dense; meant for small `|V|`).
    pub fn softmax_all(&self, history: &[ItemIdx]) -> Result<Vec<f64>> {
        let rep = self.encode(history)?;
        Ok(softmax(&self.scores_all(&rep)))
    }

    /// Forward pass keeping what the backward pass needs.
    pub(crate) fn forward(&self, history: &[ItemIdx]) -> (UserRepresentation, Tape) {
        let d = self.dim;
        match self.kind {
            EncoderKind::MeanPool => {
                let mut h = vec![0.0; d];
                for &v in history {
                    axpy(1.0, self.embedding(v), &mut h);
                }
                let inv = 1.0 / history.len() as f64;
                h.iter_mut().for_each(|x| *x *= inv);
                (UserRepresentation::new(d, h), Tape::MeanPool)
            }
            EncoderKind::Gru => {
                let enc = self.encoder();
                let mut h = vec![0.0; d];
                let mut steps = Vec::with_capacity(history.len());
                for &v in history {
                    let x = self.embedding(v);
                    let mut z = gru_affine(enc, d, GRU_WZ, GRU_UZ, GRU_BZ, x, &h);
                    z.iter_mut().for_each(|a| *a = sigmoid(*a));
                    let mut r = gru_affine(enc, d, GRU_WR, GRU_UR, GRU_BR, x, &h);
                    r.iter_mut().for_each(|a| *a = sigmoid(*a));
                    let rh: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
                    let mut cand = gru_affine(enc, d, GRU_WH, GRU_UH, GRU_BH, x, &rh);
                    cand.iter_mut().for_each(|a| *a = libm::tanh(*a));
                    let next: Vec<f64> =
                        (0..d).map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i]).collect();
                    steps.push(GruStep { h_prev: core::mem::replace(&mut h, next), z, r, rh, cand });
                }
                (UserRepresentation::new(d, h), Tape::Gru(steps))
            }
            EncoderKind::MultiHead => {
                let queries = self.encoder();
                let mut out = vec![0.0; self.heads * d];
                let mut weights = Vec::with_capacity(self.heads);
                for j in 0..self.heads {
                    let q = &queries[j * d..(j + 1) * d];
                    let logits: Vec<f64> = history.iter().map(|&v| dot(q, self.embedding(v))).collect();
                    let alpha = softmax(&logits);
                    let hj = &mut out[j * d..(j + 1) * d];
                    for (&v, &a) in history.iter().zip(&alpha) {
                        axpy(a, self.embedding(v), hj);
                    }
                    weights.push(alpha);
                }
                (UserRepresentation::new(d, out), Tape::MultiHead(weights))
            }
        }
    }

    /// Accumulates into `grads` the gradient of a loss whose derivative with
    /// respect to the user vectors is `grad_rep` (`heads x dim`).
    pub(crate) fn backward(&self, history: &[ItemIdx], tape: &Tape, grad_rep: &[f64], grads: &mut [f64]) {
        let d = self.dim;
        let enc_base = self.n_items * d;
        match tape {
            Tape::MeanPool => {
                let inv = 1.0 / history.len() as f64;
                for &v in history {
                    let off = v as usize * d;
                    axpy(inv, grad_rep, &mut grads[off..off + d]);
                }
            }
            Tape::Gru(steps) => {
                let enc = self.encoder();
                let (emb_grads, enc_grads) = grads.split_at_mut(enc_base);
                let mut dh = grad_rep.to_vec();
                let mut da_z = vec![0.0; d];
                let mut da_r = vec![0.0; d];
                let mut da_h = vec![0.0; d];
                for (step, &v) in steps.iter().zip(history).rev() {
                    let x = self.embedding(v);
                    let mut dh_prev = vec![0.0; d];
                    for i in 0..d {
                        let dcand = dh[i] * step.z[i];
                        let dz = dh[i] * (step.cand[i] - step.h_prev[i]);
                        dh_prev[i] = dh[i] * (1.0 - step.z[i]);
                        da_h[i] = dcand * (1.0 - step.cand[i] * step.cand[i]);
                        da_z[i] = dz * step.z[i] * (1.0 - step.z[i]);
                    }
                    // d(r*h) = U_h^T da_h
                    let mut drh = vec![0.0; d];
                    gemv_t(block(enc, d, GRU_UH), d, &da_h, &mut drh);
                    for i in 0..d {
                        let dr = drh[i] * step.h_prev[i];
                        dh_prev[i] += drh[i] * step.r[i];
                        da_r[i] = dr * step.r[i] * (1.0 - step.r[i]);
                    }
                    let xg = &mut emb_grads[v as usize * d..(v as usize + 1) * d];
                    for (wb, ub, bb, da, hin) in [
                        (GRU_WZ, GRU_UZ, GRU_BZ, &da_z, &step.h_prev),
                        (GRU_WR, GRU_UR, GRU_BR, &da_r, &step.h_prev),
                        (GRU_WH, GRU_UH, GRU_BH, &da_h, &step.rh),
                    ] {
                        outer_acc(da, x, block_mut(enc_grads, d, wb), d);
                        outer_acc(da, hin, block_mut(enc_grads, d, ub), d);
                        axpy(1.0, da, block_mut(enc_grads, d, bb));
                        gemv_t(block(enc, d, wb), d, da, xg);
                        if ub != GRU_UH {
                            gemv_t(block(enc, d, ub), d, da, &mut dh_prev);
                        }
                    }
                    dh = dh_prev;
                }
            }
            Tape::MultiHead(weights) => {
                let queries = self.encoder();
                for (j, alpha) in weights.iter().enumerate() {
                    let g = &grad_rep[j * d..(j + 1) * d];
                    if g.iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    let q = &queries[j * d..(j + 1) * d];
                    let dalpha: Vec<f64> = history.iter().map(|&v| dot(g, self.embedding(v))).collect();
                    let mean: f64 = alpha.iter().zip(&dalpha).map(|(a, b)| a * b).sum();
                    for (i, &v) in history.iter().enumerate() {
                        let dlogit = alpha[i] * (dalpha[i] - mean);
                        let off = v as usize * d;
                        let eg = &mut grads[off..off + d];
                        axpy(alpha[i], g, eg);
                        axpy(dlogit, q, eg);
                        let qoff = enc_base + j * d;
                        let e = self.embedding(v);
                        axpy(dlogit, e, &mut grads[qoff..qoff + d]);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Tape {
    MeanPool,
    Gru(Vec<GruStep>),
    /// Attention weights per head.
    MultiHead(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub(crate) struct GruStep {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand: Vec<f64>,
}

fn gru_offset(d: usize, block: usize) -> usize {
    // blocks come in (W, U, b) triples
    let triple = block / 3;
    let within = block % 3;
    triple * (2 * d * d + d) + within * d * d
}

fn block(enc: &[f64], d: usize, b: usize) -> &[f64] {
    let off = gru_offset(d, b);
    let len = if b % 3 == 2 { d } else { d * d };
    &enc[off..off + len]
}

fn block_mut(enc: &mut [f64], d: usize, b: usize) -> &mut [f64] {
    let off = gru_offset(d, b);
    let len = if b % 3 == 2 { d } else { d * d };
    &mut enc[off..off + len]
}

/// `W x + U h + b`.
fn gru_affine(enc: &[f64], d: usize, w: usize, u: usize, b: usize, x: &[f64], h: &[f64]) -> Vec<f64> {
    let wm = block(enc, d, w);
    let um = block(enc, d, u);
    let bias = block(enc, d, b);
    (0..d)
        .map(|i| dot(&wm[i * d..(i + 1) * d], x) + dot(&um[i * d..(i + 1) * d], h) + bias[i])
        .collect()
}

/// `out += M^T v` for a `d x d` row-major `M`.
fn gemv_t(m: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    for i in 0..d {
        if v[i] != 0.0 {
            axpy(v[i], &m[i * d..(i + 1) * d], out);
        }
    }
}

/// `M += a b^T`.
fn outer_acc(a: &[f64], b: &[f64], m: &mut [f64], d: usize) {
    for i in 0..d {
        axpy(a[i], b, &mut m[i * d..(i + 1) * d]);
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Max-shifted softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

// ---- checkpoint codec ----

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"WSLREC1\0";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 4 + 1 + 4;

impl SequenceScorer {
    /// Binary checkpoint: magic, then little-endian version (u32), n_items
    /// (u64), dim (u32), encoder tag (u8), heads (u32) and every parameter
    /// as an f64 in the layout documented at module level.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.params.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_items as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.push(self.kind.tag());
        out.extend_from_slice(&(self.heads as u32).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.into());
        if bytes.len() < HEADER_LEN {
            return Err(bad("file shorter than header"));
        }
        if &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let version = u32_at(8);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let n_items = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let dim = u32_at(20) as usize;
        let kind = EncoderKind::from_tag(bytes[24])
            .ok_or_else(|| Error::Checkpoint(format!("unknown encoder tag {}", bytes[24])))?;
        let heads = u32_at(25) as usize;
        let n_items = usize::try_from(n_items).map_err(|_| bad("item count overflows"))?;
        Self::check_shape(n_items, dim, kind, heads).map_err(|e| Error::Checkpoint(format!("{e}")))?;
        let expected = n_items
            .checked_mul(dim)
            .and_then(|e| e.checked_add(Self::encoder_len(kind, dim, heads)))
            .ok_or_else(|| bad("parameter count overflows"))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != expected.saturating_mul(8) {
            return Err(Error::Checkpoint(format!(
                "expected {expected} parameters ({} bytes), found {} bytes",
                expected.saturating_mul(8),
                body.len()
            )));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::from_params(n_items, dim, kind, heads, params).map_err(|e| Error::Checkpoint(format!("{e}")))
    }
}
