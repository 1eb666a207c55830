use super::{canonical_pool, Batch, StrategyContext};
use crate::error::Result;
use crate::kmeans::{sample_weighted, sq_dist};
use crate::model::gradient_embeddings;
use crate::rng::StreamRng;

/// k-means++ seeding over last-layer gradient embeddings.
///
/// D^2 sampling starts from an implicit center at the origin, so the first
/// seed is drawn proportional to the squared embedding norm and zero-gradient
/// (confident) instances carry no mass at any step. When every remaining
/// instance has zero mass the lowest unchosen index fills the slot.
pub fn select_badge(ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let emb = gradient_embeddings(&ctx.head, ctx.embeddings, &pool)?;
    let dim = ctx.head.n_classes * ctx.head.n_dims;
    let row = |p: usize| &emb[p * dim..(p + 1) * dim];
    let mut d2: Vec<f64> = (0..pool.len()).map(|p| row(p).iter().map(|v| v * v).sum()).collect();
    let mut taken = vec![false; pool.len()];
    let mut out = Vec::with_capacity(b);
    for _ in 0..b {
        let p = sample_weighted(&d2, rng)
            .unwrap_or_else(|| (0..pool.len()).find(|&q| !taken[q]).unwrap());
        taken[p] = true;
        out.push(pool[p]);
        for q in 0..pool.len() {
            d2[q] = if taken[q] { 0.0 } else { d2[q].min(sq_dist(row(q), row(p))) };
        }
    }
    Ok(Batch::new(out))
}
