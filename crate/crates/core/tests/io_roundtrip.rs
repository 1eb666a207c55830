use proptest::prelude::*;
use refine::data::{
    decode_embeddings, decode_labels, encode_embeddings, encode_labels, load_embeddings, load_indices, load_labels,
    normalize_features, save_embeddings, save_indices, save_labels, EmbeddingMatrix, LabelVector,
};
use refine::model::LinearHead;

fn matrix() -> impl Strategy<Value = EmbeddingMatrix> {
    (1usize..20, 1usize..8).prop_flat_map(|(n, d)| {
        prop::collection::vec(-1e6f32..1e6, n * d).prop_map(move |v| EmbeddingMatrix::new(n, d, v).unwrap())
    })
}

proptest! {
    #[test]
    fn embeddings_roundtrip_bit_exact(m in matrix()) {
        let back = decode_embeddings(&encode_embeddings(&m)).unwrap();
        prop_assert_eq!(back.n_instances(), m.n_instances());
        let a: Vec<u32> = m.values().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.values().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn labels_roundtrip(k in 1usize..12, raw in prop::collection::vec(0u32..1000, 1..50)) {
        let l = LabelVector::new(raw.iter().map(|v| v % k as u32).collect(), k).unwrap();
        prop_assert_eq!(decode_labels(&encode_labels(&l), None).unwrap(), l);
    }

    #[test]
    fn normalized_rows_have_unit_norm(m in matrix()) {
        prop_assume!((0..m.n_instances()).all(|i| m.row(i).iter().any(|&v| v.abs() > 1e-3)));
        let u = normalize_features(&m).unwrap();
        for i in 0..u.n_instances() {
            let norm: f64 = u.row(i).iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn head_roundtrip(k in 1usize..5, d in 1usize..6, seed in any::<u64>()) {
        let mut h = LinearHead::zeros(k, d);
        for (i, w) in h.weights.iter_mut().chain(h.bias.iter_mut()).enumerate() {
            *w = ((seed.wrapping_mul(i as u64 + 1) % 1000) as f64 - 500.0) / 37.0;
        }
        prop_assert_eq!(LinearHead::from_bytes(&h.to_bytes()).unwrap(), h);
    }
}

#[test]
fn corrupt_files_are_format_errors() {
    let m = EmbeddingMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let bytes = encode_embeddings(&m);
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert_eq!(decode_embeddings(&bad_magic).unwrap_err().exit_code(), 3);
    assert_eq!(decode_embeddings(&bytes[..bytes.len() - 1]).unwrap_err().exit_code(), 3);
    assert!(matches!(decode_embeddings(&bytes[..3]).unwrap_err(), refine::Error::Format(_)));
}

#[test]
fn files_roundtrip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let m = EmbeddingMatrix::new(3, 2, vec![0.5, -1.0, 2.0, 0.25, 1e-3, 7.0]).unwrap();
    let l = LabelVector::new(vec![0, 2, 1], 3).unwrap();
    for name in ["e.refb", "e.csv"] {
        save_embeddings(dir.path().join(name), &m).unwrap();
        assert_eq!(load_embeddings(dir.path().join(name)).unwrap(), m);
    }
    for name in ["l.refl", "l.csv"] {
        save_labels(dir.path().join(name), &l).unwrap();
        assert_eq!(load_labels(dir.path().join(name), 3).unwrap(), l);
    }
    save_indices(dir.path().join("i.csv"), &[4, 1, 9]).unwrap();
    assert_eq!(load_indices(dir.path().join("i.csv")).unwrap(), vec![1, 4, 9]);
}

#[test]
fn bad_label_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.csv");
    std::fs::write(&p, "label\n0\n5\n").unwrap();
    assert!(matches!(load_labels(&p, 3).unwrap_err(), refine::Error::Data(_)));
    std::fs::write(&p, "label\n0\ncat\n").unwrap();
    assert_eq!(load_labels(&p, 3).unwrap_err().exit_code(), 3);
}
