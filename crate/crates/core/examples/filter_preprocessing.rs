//! Use progressive filtering as a one-off preprocessing step: refine the
//! unlabeled pool once, then hand it to a single downstream strategy.

use refine::data::synth_gaussian;
use refine::harness::{filter_pool, RunConfig};
use refine::rng;
use refine::strategies::{Strategy, StrategyContext, StrategyKind, StrategySpec};

fn main() -> refine::Result<()> {
    let cfg = RunConfig::from_toml_str(
        r#"
[dataset.synthetic]
n_per_class = 120
n_classes = 4
n_dims = 8
cluster_spread = 1.0
center_scale = 2.0
seed = 4

[al]
b = 10
"#,
    )?;
    let labeled = [0, 120, 240, 360];
    let out = filter_pool(&cfg, Some(&labeled))?;
    println!("refined pool: {} instances", out.refined.len());

    let (m, labels) = synth_gaussian(cfg.dataset.synthetic.as_ref().unwrap())?;
    let m = refine::data::normalize_features(&m)?;
    let y: Vec<u32> = labeled.iter().map(|&i| labels.get(i)).collect();
    let head = refine::model::train_head(&m, &labeled, &y, labels.n_classes(), &cfg.model)?;
    let ctx = StrategyContext::new(&m, labeled.to_vec(), y, head)?;
    let batch = StrategySpec::from(StrategyKind::Coreset).select(&ctx, &out.refined.indices, cfg.al.b, &mut rng::stream(0, &[1]))?;
    println!("coreset batch from the refined pool: {:?}", batch.indices());
    Ok(())
}
