//! Linear softmax head trained on frozen features.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{write_atomic, EmbeddingMatrix};
use crate::error::{data_err, format_err, usage, Error, Result};
use crate::rng;

pub const HEAD_MAGIC: &[u8; 4] = b"REFH";

#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    /// Row-major K x D.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub n_classes: usize,
    pub n_dims: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub schedule: Schedule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            minibatch: 64,
            lr: 0.01,
            weight_decay: 1e-4,
            schedule: Schedule::Cosine,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(usage!("epochs must be at least 1"));
        }
        if self.minibatch == 0 {
            return Err(usage!("minibatch must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(usage!("learning rate must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(usage!("weight decay must be non-negative"));
        }
        Ok(())
    }

    /// Learning rate for 0-based `epoch`; cosine from `lr` toward 0 over `epochs`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            Schedule::Cosine => {
                let t = epoch as f64 / self.epochs as f64;
                0.5 * self.lr * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

/// Row-major N x K probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities {
    pub n_rows: usize,
    pub n_classes: usize,
    pub values: Vec<f64>,
}

impl Probabilities {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn argmax(&self, i: usize) -> usize {
        argmax(self.row(i))
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// In-place softmax with max subtraction.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

impl LinearHead {
    pub fn zeros(n_classes: usize, n_dims: usize) -> Self {
        Self {
            weights: vec![0.0; n_classes * n_dims],
            bias: vec![0.0; n_classes],
            n_classes,
            n_dims,
        }
    }

    fn check_dims(&self, m: &EmbeddingMatrix) -> Result<()> {
        if m.n_dims() != self.n_dims {
            return Err(data_err!(
                "feature dimension {} does not match head dimension {}",
                m.n_dims(),
                self.n_dims
            ));
        }
        Ok(())
    }

    /// Logits `W x + b` for an arbitrary feature vector.
    pub fn logits_of<T: Copy + Into<f64>>(&self, x: &[T], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let w = &self.weights[k * self.n_dims..(k + 1) * self.n_dims];
            *o = self.bias[k] + w.iter().zip(x).map(|(&w, &x)| w * x.into()).sum::<f64>();
        }
    }

    pub fn proba_of<T: Copy + Into<f64>>(&self, x: &[T]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_classes];
        self.logits_of(x, &mut z);
        softmax_in_place(&mut z);
        z
    }

    pub fn predict_of<T: Copy + Into<f64>>(&self, x: &[T]) -> usize {
        let mut z = vec![0.0; self.n_classes];
        self.logits_of(x, &mut z);
        argmax(&z)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(HEAD_MAGIC);
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&(self.n_classes as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_dims as u32).to_le_bytes());
        for v in self.weights.iter().chain(&self.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 14 || &bytes[..4] != HEAD_MAGIC {
            return Err(format_err!("not a REFH head file"));
        }
        if u16::from_le_bytes([bytes[4], bytes[5]]) != 1 {
            return Err(format_err!("unsupported REFH version"));
        }
        let k = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let payload = &bytes[14..];
        if payload.len() != 8 * (k * d + k) {
            return Err(format_err!("REFH payload length mismatch"));
        }
        let vals: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let head = Self {
            weights: vals[..k * d].to_vec(),
            bias: vals[k * d..].to_vec(),
            n_classes: k,
            n_dims: d,
        };
        if !head.is_finite() {
            return Err(data_err!("REFH contains non-finite parameters"));
        }
        Ok(head)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Training loss and its gradient: mean cross-entropy over `rows` plus
/// `weight_decay / 2 * ||W||^2` (bias not decayed).
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
}

pub fn loss_and_grad(
    head: &LinearHead,
    m: &EmbeddingMatrix,
    rows: &[usize],
    labels: &[u32],
    weight_decay: f64,
) -> LossGrad {
    let (k, d) = (head.n_classes, head.n_dims);
    let mut gw = vec![0.0; k * d];
    let mut gb = vec![0.0; k];
    let mut loss = 0.0;
    let mut p = vec![0.0; k];
    let scale = 1.0 / rows.len().max(1) as f64;
    for (&i, &y) in rows.iter().zip(labels) {
        let x = m.row(i);
        head.logits_of(x, &mut p);
        softmax_in_place(&mut p);
        loss -= p[y as usize].max(f64::MIN_POSITIVE).ln() * scale;
        for c in 0..k {
            let g = (p[c] - if c == y as usize { 1.0 } else { 0.0 }) * scale;
            gb[c] += g;
            for (gw, &xv) in gw[c * d..(c + 1) * d].iter_mut().zip(x) {
                *gw += g * xv as f64;
            }
        }
    }
    let mut sq = 0.0;
    for (g, &w) in gw.iter_mut().zip(&head.weights) {
        *g += weight_decay * w;
        sq += w * w;
    }
    loss += 0.5 * weight_decay * sq;
    LossGrad {
        loss,
        grad_weights: gw,
        grad_bias: gb,
    }
}

/// Minibatch SGD on softmax cross-entropy from a zero head, cosine-annealed
/// learning rate stepped once per epoch. Deterministic given `cfg.seed`.
pub fn train_head(
    m: &EmbeddingMatrix,
    rows: &[usize],
    labels: &[u32],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<LinearHead> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(usage!("cannot train on an empty labeled set"));
    }
    if rows.len() != labels.len() {
        return Err(data_err!("{} rows but {} labels", rows.len(), labels.len()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l as usize >= n_classes) {
        return Err(data_err!("label {l} outside [0, {n_classes})"));
    }
    if let Some(&i) = rows.iter().find(|&&i| i >= m.n_instances()) {
        return Err(data_err!("row {i} out of range"));
    }
    let mut head = LinearHead::zeros(n_classes, m.n_dims());
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut shuffle = rng::stream(cfg.seed, &[rng::tag::TRAIN]);
    let mut batch_rows = Vec::with_capacity(cfg.minibatch);
    let mut batch_labels = Vec::with_capacity(cfg.minibatch);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut shuffle);
        for chunk in order.chunks(cfg.minibatch) {
            batch_rows.clear();
            batch_labels.clear();
            batch_rows.extend(chunk.iter().map(|&o| rows[o]));
            batch_labels.extend(chunk.iter().map(|&o| labels[o]));
            let g = loss_and_grad(&head, m, &batch_rows, &batch_labels, cfg.weight_decay);
            for (w, gw) in head.weights.iter_mut().zip(&g.grad_weights) {
                *w -= lr * gw;
            }
            for (b, gb) in head.bias.iter_mut().zip(&g.grad_bias) {
                *b -= lr * gb;
            }
        }
    }
    Ok(head)
}

pub fn predict_proba(head: &LinearHead, m: &EmbeddingMatrix, rows: &[usize]) -> Result<Probabilities> {
    head.check_dims(m)?;
    let k = head.n_classes;
    let mut values = vec![0.0; rows.len() * k];
    for (r, &i) in rows.iter().enumerate() {
        let out = &mut values[r * k..(r + 1) * k];
        head.logits_of(m.row(i), out);
        softmax_in_place(out);
    }
    Ok(Probabilities {
        n_rows: rows.len(),
        n_classes: k,
        values,
    })
}

/// Top-1 minus top-2 probability of a single row.
pub fn margin_of(p: &[f64]) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in p {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    first - second
}

pub fn margin_scores(probs: &Probabilities) -> Result<Vec<f64>> {
    if probs.n_classes < 2 {
        return Err(usage!("margins need at least 2 classes"));
    }
    Ok((0..probs.n_rows).map(|i| margin_of(probs.row(i))).collect())
}

/// Row-major N x (K*D): `(p - onehot(argmax p)) ⊗ x` per instance.
pub fn gradient_embeddings(head: &LinearHead, m: &EmbeddingMatrix, rows: &[usize]) -> Result<Vec<f64>> {
    head.check_dims(m)?;
    let (k, d) = (head.n_classes, head.n_dims);
    let mut out = vec![0.0; rows.len() * k * d];
    for (r, &i) in rows.iter().enumerate() {
        let x = m.row(i);
        let mut p = head.proba_of(x);
        let y = argmax(&p);
        p[y] -= 1.0;
        let emb = &mut out[r * k * d..(r + 1) * k * d];
        for c in 0..k {
            for (e, &xv) in emb[c * d..(c + 1) * d].iter_mut().zip(x) {
                *e = p[c] * xv as f64;
            }
        }
    }
    Ok(out)
}

/// Logit-space Fisher block `diag(p) - p p^T` and the squared feature norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherBlock {
    /// Row-major K x K, symmetric PSD.
    pub matrix: Vec<f64>,
    pub sq_norm: f64,
}

impl FisherBlock {
    pub fn trace(&self) -> f64 {
        let k = (self.matrix.len() as f64).sqrt() as usize;
        (0..k).map(|c| self.matrix[c * k + c]).sum()
    }
}

pub fn fisher_block_of(p: &[f64], sq_norm: f64) -> FisherBlock {
    let k = p.len();
    let mut matrix = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            matrix[a * k + b] = if a == b { p[a] } else { 0.0 } - p[a] * p[b];
        }
    }
    FisherBlock { matrix, sq_norm }
}

pub fn fisher_blocks(head: &LinearHead, m: &EmbeddingMatrix, rows: &[usize]) -> Result<Vec<FisherBlock>> {
    head.check_dims(m)?;
    Ok(rows
        .iter()
        .map(|&i| {
            let x = m.row(i);
            let sq = x.iter().map(|&v| (v as f64).powi(2)).sum();
            fisher_block_of(&head.proba_of(x), sq)
        })
        .collect())
}

/// Fraction of argmax predictions matching `labels`.
pub fn evaluate(head: &LinearHead, m: &EmbeddingMatrix, rows: &[usize], labels: &[u32]) -> Result<f64> {
    if rows.is_empty() {
        return Err(usage!("cannot evaluate on an empty test set"));
    }
    if rows.len() != labels.len() {
        return Err(data_err!("{} rows but {} labels", rows.len(), labels.len()));
    }
    head.check_dims(m)?;
    let correct = rows
        .iter()
        .zip(labels)
        .filter(|(&i, &y)| head.predict_of(m.row(i)) == y as usize)
        .count();
    Ok(correct as f64 / rows.len() as f64)
}
