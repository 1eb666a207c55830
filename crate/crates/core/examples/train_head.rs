//! Train the linear softmax head on a small labeled subset and inspect its
//! accuracy, probabilities and margins.

use refine::data::{normalize_features, stratified_split, synth_gaussian, SyntheticSpec};
use refine::model::{evaluate, margin_scores, predict_proba, train_head, TrainConfig};

fn main() -> refine::Result<()> {
    let (m, labels) = synth_gaussian(&SyntheticSpec {
        n_per_class: 200,
        n_classes: 4,
        n_dims: 8,
        cluster_spread: 1.0,
        center_scale: 2.0,
        seed: 3,
    })?;
    let m = normalize_features(&m)?;
    let (train, test) = stratified_split(&labels, 0.25, 0)?;
    let test_y: Vec<u32> = test.iter().map(|&i| labels.get(i)).collect();

    // The default recipe moves slowly on small labeled sets; a larger step
    // shows what the head can reach.
    for lr in [0.01, 0.5] {
        let cfg = TrainConfig { lr, ..Default::default() };
        for n in [4, 16, 64, 256] {
            let rows: Vec<usize> = train.iter().step_by(train.len() / n).take(n).copied().collect();
            let y: Vec<u32> = rows.iter().map(|&i| labels.get(i)).collect();
            let head = train_head(&m, &rows, &y, labels.n_classes(), &cfg)?;
            let acc = evaluate(&head, &m, &test, &test_y)?;
            let margins = margin_scores(&predict_proba(&head, &m, &test)?)?;
            let mean_margin = margins.iter().sum::<f64>() / margins.len() as f64;
            println!("lr {lr:<4} {n:>4} labels: test accuracy {acc:.3}, mean margin {mean_margin:.3}");
        }
    }
    Ok(())
}
