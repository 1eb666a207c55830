use super::{canonical_pool, Batch, StrategyContext};
use crate::error::Result;
use crate::model::fisher_block_of;
use crate::rng::StreamRng;

/// Greedy forward selection maximizing `tr(sum_i ||x_i||^2 F_i)` with the
/// last-layer block approximation `F_i = diag(p_i) - p_i p_i^T`.
pub fn select_bait(ctx: &StrategyContext, pool: &[usize], b: usize, _rng: &mut StreamRng) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let gains: Vec<f64> = pool
        .iter()
        .map(|&i| {
            let sq: f64 = ctx.embeddings.row(i).iter().map(|&v| (v as f64).powi(2)).sum();
            sq * fisher_block_of(ctx.proba(i), sq).trace()
        })
        .collect();
    let mut taken = vec![false; pool.len()];
    let mut out = Vec::with_capacity(b);
    for _ in 0..b {
        let mut best: Option<usize> = None;
        for (p, &g) in gains.iter().enumerate() {
            if !taken[p] && best.is_none_or(|q| g > gains[q]) {
                best = Some(p);
            }
        }
        let p = best.expect("pool holds at least b instances");
        taken[p] = true;
        out.push(pool[p]);
    }
    Ok(Batch::new(out))
}
