use super::{canonical_pool, Batch, StrategyContext};
use crate::data::sq_dist;
use crate::error::Result;
use crate::rng::StreamRng;

/// Greedy k-center: repeatedly take the pool point farthest from its nearest
/// labeled-or-selected point. Without labels the first pick is the point
/// farthest from the pool mean.
pub fn select_coreset(ctx: &StrategyContext, pool: &[usize], b: usize, _rng: &mut StreamRng) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let m = ctx.embeddings;
    let mut min_d: Vec<f64> = if ctx.labeled.is_empty() {
        let d = m.n_dims();
        let mut mean = vec![0.0f64; d];
        for &i in &pool {
            for (acc, &v) in mean.iter_mut().zip(m.row(i)) {
                *acc += v as f64;
            }
        }
        let mean: Vec<f32> = mean.iter().map(|v| (v / pool.len() as f64) as f32).collect();
        pool.iter().map(|&i| sq_dist(m.row(i), &mean)).collect()
    } else {
        pool.iter()
            .map(|&i| {
                ctx.labeled
                    .iter()
                    .map(|&l| m.sq_dist(i, l))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    };
    let mut taken = vec![false; pool.len()];
    let mut out = Vec::with_capacity(b);
    for step in 0..b {
        let mut best: Option<usize> = None;
        for p in 0..pool.len() {
            if !taken[p] && best.is_none_or(|q| min_d[p] > min_d[q]) {
                best = Some(p);
            }
        }
        let p = best.expect("pool holds at least b instances");
        taken[p] = true;
        out.push(pool[p]);
        if step == 0 && ctx.labeled.is_empty() {
            // Distances to the mean only chose the first center.
            min_d = pool.iter().map(|&i| m.sq_dist(i, pool[p])).collect();
        } else {
            for (q, d) in min_d.iter_mut().enumerate() {
                *d = d.min(m.sq_dist(pool[q], pool[p]));
            }
        }
    }
    Ok(Batch::new(out))
}
