//! Filter an unlabeled pool with the default ensemble and print how the pool
//! shrinks round by round and which members contributed.

use std::collections::BTreeMap;

use refine::data::{synth_gaussian, PoolState, SyntheticSpec};
use refine::filtering::{progressive_filter, FilterConfig};
use refine::model::TrainConfig;
use refine::strategies::{StrategyContext, StrategyKind, StrategySpec};

fn main() -> refine::Result<()> {
    let (m, labels) = synth_gaussian(&SyntheticSpec {
        n_per_class: 150,
        n_classes: 4,
        n_dims: 8,
        cluster_spread: 1.0,
        center_scale: 2.0,
        seed: 21,
    })?;
    let universe: Vec<usize> = (0..m.n_instances()).collect();
    let pool = PoolState::new(&universe, &[0, 150, 300, 450])?;
    let ctx = StrategyContext::train(&m, &labels, &pool, &TrainConfig::default())?;
    let ensemble: Vec<StrategySpec> = StrategyKind::ENSEMBLE.iter().map(|&k| k.into()).collect();
    let cfg = FilterConfig {
        batch_size: 10,
        ..Default::default()
    };

    let (refined, trace) = progressive_filter(&pool.unlabeled(), &ensemble, &cfg, &ctx, 1, 0)?;
    let sizes: Vec<String> = trace.sizes().iter().map(|s| s.to_string()).collect();
    println!("pool sizes: {}", sizes.join(" -> "));
    if let Some(r) = trace.discarded_round {
        println!("round {r} was discarded for shrinking below the floor");
    }

    let mut picks: BTreeMap<&str, usize> = BTreeMap::new();
    for br in trace.rounds.last().map_or(&[][..], |r| &r.batches[..]) {
        *picks.entry(br.strategy.as_str()).or_default() += br.indices.len();
    }
    println!("final round picks per member: {picks:?}");
    println!("refined pool holds {} of {} unlabeled", refined.len(), pool.n_unlabeled());
    Ok(())
}
