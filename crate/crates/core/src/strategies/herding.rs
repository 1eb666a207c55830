use super::{canonical_pool, Batch, StrategyContext};
use crate::coverage::{greedy_cover, uncertainty_weights, Bandwidth, KernelConfig, KernelKind};
use crate::error::Result;
use crate::rng::StreamRng;

pub(super) fn herding(
    ctx: &StrategyContext,
    pool: &[usize],
    b: usize,
    uncertainty: bool,
    bandwidth: Option<f64>,
) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let cfg = KernelConfig {
        kind: KernelKind::Rbf,
        bandwidth: bandwidth.map_or(Bandwidth::Median, Bandwidth::Fixed),
    };
    let weights = uncertainty.then(|| uncertainty_weights(ctx, &pool));
    greedy_cover(ctx.embeddings, &pool, &ctx.labeled, b, weights.as_deref(), &cfg)
}

/// Greedy kernel coverage of the pool, unit weights.
pub fn select_maxherding(ctx: &StrategyContext, pool: &[usize], b: usize, _rng: &mut StreamRng) -> Result<Batch> {
    herding(ctx, pool, b, false, None)
}

/// Greedy kernel coverage of the pool with `1 - margin` target weights.
pub fn select_uherding(ctx: &StrategyContext, pool: &[usize], b: usize, _rng: &mut StreamRng) -> Result<Batch> {
    herding(ctx, pool, b, true, None)
}
