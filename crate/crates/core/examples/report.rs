//! Run a small paired-seed experiment for two methods into a directory and
//! aggregate it into curves, relative curves, a win matrix and a summary.
//!
//! ```text
//! cargo run --release --example report -- [out_dir]
//! ```

use refine::harness::{report, run_experiment, MethodKind, RunConfig};
use refine::strategies::StrategyKind;

fn main() -> refine::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("refine_report"), Into::into);
    let base = r#"
[dataset.synthetic]
n_per_class = 150
n_classes = 4
n_dims = 8
cluster_spread = 1.0
center_scale = 2.0
seed = 9

[al]
b = 8
cycles = 6
trials = 3

[ensemble]
members = ["margin", "badge", "coreset", "typiclust"]
"#;
    for (method, strategy) in [(MethodKind::Single, Some(StrategyKind::Random)), (MethodKind::Refine, None)] {
        let mut cfg = RunConfig::from_toml_str(base)?;
        cfg.al.method = method;
        cfg.al.strategy = strategy;
        cfg.output.dir = Some(out.clone());
        run_experiment(&cfg)?;
    }
    let files = report(&out)?;
    print!("{}", std::fs::read_to_string(&files.summary).unwrap());
    println!("tables in {}", out.display());
    Ok(())
}
