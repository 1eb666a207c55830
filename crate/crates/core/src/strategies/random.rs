use rand::seq::index::sample;

use super::{canonical_pool, Batch, StrategyContext};
use crate::error::Result;
use crate::rng::StreamRng;

/// Uniform sample of `b` pool indices without replacement.
pub fn select_random(ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let picks = sample(rng, pool.len(), b);
    Ok(Batch::new(picks.into_iter().map(|p| pool[p]).collect()))
}
