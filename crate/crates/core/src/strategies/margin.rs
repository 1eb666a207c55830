use super::{canonical_pool, smallest_margin, Batch, StrategyContext};
use crate::error::Result;
use crate::rng::StreamRng;

/// The `b` pool instances with the smallest top-1 minus top-2 probability gap.
pub fn select_margin(ctx: &StrategyContext, pool: &[usize], b: usize, _rng: &mut StreamRng) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    Ok(Batch::new(smallest_margin(ctx, &pool, b)))
}
