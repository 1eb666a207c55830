//! Run every query strategy once on the same trained model and pool, and
//! report how many classes each batch touches and how uncertain it is.

use refine::data::{synth_gaussian, PoolState, SyntheticSpec};
use refine::model::TrainConfig;
use refine::rng;
use refine::strategies::{Strategy, StrategyContext, StrategyKind, StrategySpec};

fn main() -> refine::Result<()> {
    let (m, labels) = synth_gaussian(&SyntheticSpec {
        n_per_class: 100,
        n_classes: 4,
        n_dims: 8,
        cluster_spread: 1.2,
        center_scale: 2.0,
        seed: 11,
    })?;
    let universe: Vec<usize> = (0..m.n_instances()).collect();
    let pool = PoolState::new(&universe, &[0, 1, 100, 101, 200, 201, 300, 301])?;
    let ctx = StrategyContext::train(&m, &labels, &pool, &TrainConfig::default())?;
    let unlabeled = pool.unlabeled();
    let b = 12;

    println!("{:<12} {:>8} {:>12}", "strategy", "classes", "mean margin");
    for kind in StrategyKind::ALL {
        let spec = StrategySpec::from(kind);
        let batch = spec.select(&ctx, &unlabeled, b, &mut rng::stream(5, &[kind as u64]))?;
        let mut classes: Vec<u32> = batch.indices().iter().map(|&i| labels.get(i)).collect();
        classes.sort_unstable();
        classes.dedup();
        let margin = batch.indices().iter().map(|&i| ctx.margin(i)).sum::<f64>() / b as f64;
        println!("{:<12} {:>8} {:>12.3}", spec.name(), classes.len(), margin);
    }
    Ok(())
}
