//! Generate Gaussian blobs, write them in the binary formats, read them back
//! and split into train and test.
//!
//! ```text
//! cargo run --example synth_and_io -- [out_dir]
//! ```

use refine::data::{
    load_embeddings, load_labels, normalize_features, save_embeddings, save_labels, stratified_split, synth_gaussian,
    SyntheticSpec,
};

fn main() -> refine::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("refine_synth"), Into::into);
    std::fs::create_dir_all(&out).map_err(|e| refine::Error::Io { path: out.clone(), source: e })?;

    let spec = SyntheticSpec {
        n_per_class: 100,
        n_classes: 5,
        n_dims: 16,
        cluster_spread: 1.0,
        center_scale: 3.0,
        seed: 42,
    };
    let (m, labels) = synth_gaussian(&spec)?;
    save_embeddings(out.join("embeddings.refb"), &m)?;
    save_labels(out.join("labels.refl"), &labels)?;

    let m2 = load_embeddings(out.join("embeddings.refb"))?;
    let l2 = load_labels(out.join("labels.refl"), spec.n_classes)?;
    assert_eq!(m, m2);
    assert_eq!(labels, l2);
    println!("{} x {} embeddings, {} classes, round trip exact", m2.n_instances(), m2.n_dims(), l2.n_classes());

    let z = normalize_features(&m2)?;
    let norm0 = z.row(0).iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
    println!("row 0 norm after normalization: {norm0:.6}");

    let (train, test) = stratified_split(&l2, 0.2, 7)?;
    println!("split: {} train, {} test", train.len(), test.len());
    println!("files in {}", out.display());
    Ok(())
}
