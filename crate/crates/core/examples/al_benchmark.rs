//! Paired-seed benchmark on synthetic Gaussian blobs: random sampling on the
//! full pool, random sampling on the filtered pool, and the full two-stage
//! selector.
//!
//! ```text
//! cargo run --release --example al_benchmark -- [seeds] [cluster_spread]
//! ```

use std::collections::BTreeMap;

use refine::harness::{run_trial, win_matrix, Dataset, MethodKind, RunConfig, TrialResult};
use refine::strategies::StrategyKind;

fn config(spread: f64, method: MethodKind) -> RunConfig {
    let mut cfg = RunConfig::from_toml_str(
        r#"
[dataset.synthetic]
n_per_class = 500
n_classes = 4
n_dims = 8
cluster_spread = 1.0
center_scale = 2.0
seed = 7

[al]
b = 10
cycles = 10
"#,
    )
    .unwrap();
    cfg.dataset.synthetic.as_mut().unwrap().cluster_spread = spread;
    cfg.al.method = method;
    if method != MethodKind::Refine {
        cfg.al.strategy = Some(StrategyKind::Random);
    }
    cfg
}

fn main() -> refine::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(10, |s| s.parse().expect("seed count"));
    let spread: f64 = args.next().map_or(1.0, |s| s.parse().expect("spread"));

    let mut by_method: BTreeMap<String, Vec<TrialResult>> = BTreeMap::new();
    for method in [MethodKind::Single, MethodKind::Filtered, MethodKind::Refine] {
        for seed in 0..seeds {
            let cfg = config(spread, method).with_seed(seed);
            let data = Dataset::for_run(&cfg)?;
            let r = run_trial(&cfg, &data)?;
            by_method.entry(r.method.clone()).or_default().push(r);
        }
    }
    for (name, rs) in &by_method {
        let aulcs: Vec<String> = rs.iter().map(|r| format!("{:.4}", r.aulc)).collect();
        let mean = rs.iter().map(|r| r.aulc).sum::<f64>() / rs.len() as f64;
        println!("{name:<16} mean {mean:.4}  [{}]", aulcs.join(" "));
    }
    let w = win_matrix(&by_method)?;
    println!("\nwin matrix (row beats column)");
    println!("{:<16}{}", "", w.methods.iter().map(|m| format!("{m:>16}")).collect::<String>());
    for (m, row) in w.methods.iter().zip(&w.values) {
        println!("{m:<16}{}", row.iter().map(|v| format!("{v:>16.2}")).collect::<String>());
    }
    Ok(())
}
