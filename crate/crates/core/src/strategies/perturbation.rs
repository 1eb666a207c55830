//! Prediction-instability strategies: feature mixing toward class anchors
//! (AlfaMix) and feature dropout (DropQuery). Both cluster the unstable
//! candidates and fall back to smallest-margin padding when too few exist.

use rand::Rng;

use super::{canonical_pool, gather_f64, smallest_margin, Batch, StrategyContext};
use crate::error::Result;
use crate::kmeans::{kmeans, sq_dist};
use crate::rng::StreamRng;

pub const DEFAULT_EPS_MIX: f64 = 0.2;
pub const DEFAULT_N_MASKS: usize = 10;
pub const DEFAULT_DROP_RATE: f64 = 0.5;

/// k-means (k = b) over the candidates, keeping the candidate nearest each
/// centroid; or all candidates plus smallest-margin padding when there are
/// fewer than `b`.
fn cluster_or_pad(
    ctx: &StrategyContext,
    pool: &[usize],
    candidates: Vec<usize>,
    b: usize,
    rng: &mut StreamRng,
) -> Batch {
    if candidates.len() <= b {
        let rest: Vec<usize> = pool.iter().copied().filter(|i| !candidates.contains(i)).collect();
        let mut out = candidates;
        let need = b - out.len();
        out.extend(smallest_margin(ctx, &rest, need));
        return Batch::new(out);
    }
    let dim = ctx.embeddings.n_dims();
    let feats = gather_f64(ctx.embeddings, &candidates);
    let c = kmeans(&feats, dim, b, rng);
    let mut out = Vec::with_capacity(b);
    for k in 0..b {
        let cen = &c.centroids[k * dim..(k + 1) * dim];
        let mut best: Option<(usize, f64)> = None;
        for p in c.members(k) {
            let d = sq_dist(&feats[p * dim..(p + 1) * dim], cen);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((p, d));
            }
        }
        if let Some((p, _)) = best {
            out.push(candidates[p]);
        }
    }
    // Clusters can empty out in the final reassignment; refill by margin.
    if out.len() < b {
        let rest: Vec<usize> = candidates.iter().copied().filter(|i| !out.contains(i)).collect();
        let need = b - out.len();
        out.extend(smallest_margin(ctx, &rest, need));
    }
    Batch::new(out)
}

/// Per-class mean of labeled features, for classes with labeled members.
fn class_anchors(ctx: &StrategyContext) -> Vec<Vec<f64>> {
    let d = ctx.embeddings.n_dims();
    let mut sums = vec![vec![0.0; d]; ctx.n_classes];
    let mut counts = vec![0usize; ctx.n_classes];
    for (&i, &y) in ctx.labeled.iter().zip(&ctx.labeled_labels) {
        counts[y as usize] += 1;
        for (s, &v) in sums[y as usize].iter_mut().zip(ctx.embeddings.row(i)) {
            *s += v as f64;
        }
    }
    sums.into_iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| s.into_iter().map(|v| v / c as f64).collect())
        .collect()
}

/// Does mixing `x` toward any anchor with weight `eps` change the prediction?
pub fn flips_under_mixing(ctx: &StrategyContext, i: usize, anchors: &[Vec<f64>], eps: f64) -> bool {
    let x = ctx.embeddings.row(i);
    let clean = ctx.head.predict_of(x);
    anchors.iter().any(|a| {
        let mixed: Vec<f64> = x
            .iter()
            .zip(a)
            .map(|(&xv, &av)| (1.0 - eps) * xv as f64 + eps * av)
            .collect();
        ctx.head.predict_of(&mixed) != clean
    })
}

pub fn select_alfamix(ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
    select_alfamix_with(ctx, pool, b, rng, DEFAULT_EPS_MIX)
}

pub(super) fn select_alfamix_with(
    ctx: &StrategyContext,
    pool: &[usize],
    b: usize,
    rng: &mut StreamRng,
    eps_mix: f64,
) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let anchors = class_anchors(ctx);
    let candidates: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| flips_under_mixing(ctx, i, &anchors, eps_mix))
        .collect();
    Ok(cluster_or_pad(ctx, &pool, candidates, b, rng))
}

pub fn select_dropquery(ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
    select_dropquery_with(ctx, pool, b, rng, DEFAULT_N_MASKS, DEFAULT_DROP_RATE)
}

/// Candidates change their argmax under at least half of `n_masks` inverted
/// dropout masks of the given rate.
pub(super) fn select_dropquery_with(
    ctx: &StrategyContext,
    pool: &[usize],
    b: usize,
    rng: &mut StreamRng,
    n_masks: usize,
    rate: f64,
) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let keep = 1.0 - rate;
    let mut masked = vec![0.0; ctx.embeddings.n_dims()];
    let mut candidates = Vec::new();
    for &i in &pool {
        let x = ctx.embeddings.row(i);
        let clean = ctx.head.predict_of(x);
        let mut flips = 0;
        for _ in 0..n_masks {
            for (m, &v) in masked.iter_mut().zip(x) {
                *m = if rng.random::<f64>() < keep { v as f64 / keep } else { 0.0 };
            }
            if ctx.head.predict_of(&masked) != clean {
                flips += 1;
            }
        }
        if n_masks > 0 && 2 * flips >= n_masks {
            candidates.push(i);
        }
    }
    Ok(cluster_or_pad(ctx, &pool, candidates, b, rng))
}
