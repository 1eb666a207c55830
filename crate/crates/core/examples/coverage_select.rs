//! Compare plain and uncertainty-weighted greedy coverage on the same pool,
//! and show the diminishing gains of each greedy step.

use refine::coverage::{greedy_cover_traced, resolve_bandwidth, uncertainty_weights, CoverageConfig};
use refine::data::{synth_gaussian, PoolState, SyntheticSpec};
use refine::model::TrainConfig;
use refine::strategies::StrategyContext;

fn main() -> refine::Result<()> {
    let (m, labels) = synth_gaussian(&SyntheticSpec {
        n_per_class: 80,
        n_classes: 3,
        n_dims: 6,
        cluster_spread: 1.3,
        center_scale: 2.0,
        seed: 8,
    })?;
    let universe: Vec<usize> = (0..m.n_instances()).collect();
    let pool = PoolState::new(&universe, &[0, 80, 160])?;
    let ctx = StrategyContext::train(&m, &labels, &pool, &TrainConfig::default())?;
    let candidates = pool.unlabeled();
    let cfg = CoverageConfig::default();
    let sigma = resolve_bandwidth(&m, &candidates, &cfg.kernel_config())?;
    println!("median bandwidth: {sigma:.3}");

    let weights = uncertainty_weights(&ctx, &candidates);
    for (name, w) in [("unweighted", None), ("uncertainty", Some(&weights[..]))] {
        let state = greedy_cover_traced(&m, &candidates, &ctx.labeled, 8, w, sigma)?;
        let margin = state.selected.iter().map(|&i| ctx.margin(i)).sum::<f64>() / 8.0;
        let gains: Vec<String> = state.gains.iter().map(|g| format!("{g:.1}")).collect();
        println!("{name:<12} mean margin {margin:.3}, gains {}", gains.join(" "));
    }
    Ok(())
}
