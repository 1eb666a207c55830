mod common;

use rand::Rng;
use refine::coverage::{
    coverage_value, greedy_cover, greedy_cover_traced, kernel, median_pairwise_distance, refine_select,
    Bandwidth, CoverageConfig, KernelConfig, KernelKind,
};
use refine::data::EmbeddingMatrix;
use refine::model::LinearHead;

#[test]
fn kernel_closed_forms() {
    let x = [0.5f32, -1.0];
    assert_eq!(kernel(&x, &x, 0.7).unwrap(), 1.0);
    let sigma = 1.3;
    let y = [0.5 + (sigma * 2f64.sqrt()) as f32, -1.0];
    assert!((kernel(&x, &y, sigma).unwrap() - (-1.0f64).exp()).abs() < 1e-6);
    assert_eq!(kernel(&x, &y, sigma).unwrap(), kernel(&y, &x, sigma).unwrap());
}

#[test]
fn coverage_value_conventions() {
    let m = EmbeddingMatrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
    let t = [0, 1, 2];
    assert!((coverage_value(&m, &t, &t, 1.0).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(coverage_value(&m, &t, &[], 1.0).unwrap(), 0.0);
    // Covered by the point at 1: exp(-1/2), 1, exp(-2).
    let want = ((-0.5f64).exp() + 1.0 + (-2.0f64).exp()) / 3.0;
    assert!((coverage_value(&m, &t, &[1], 1.0).unwrap() - want).abs() < 1e-12);
    assert_eq!(coverage_value(&m, &[], &[1], 1.0).unwrap_err().exit_code(), 2);
}

#[test]
fn identical_points_have_no_bandwidth() {
    let m = EmbeddingMatrix::from_rows(&vec![vec![1.0, 1.0]; 4]).unwrap();
    let err = median_pairwise_distance(&m, &[0, 1, 2, 3]).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn best_sim_grows_and_gains_shrink() {
    for seed in 0..20 {
        let mut r = common::rng(seed);
        let m = common::gaussian_matrix(&mut r, 40, 3);
        let cands: Vec<usize> = (0..40).collect();
        let mut prev: Option<Vec<f64>> = None;
        for b in 1..8 {
            let st = greedy_cover_traced(&m, &cands, &[], b, None, 1.0).unwrap();
            assert!(st.gains.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", st.gains);
            assert!(st.gains.iter().all(|&g| g >= 0.0));
            assert!(st.best_sim.iter().all(|&s| (0.0..=1.0).contains(&s)));
            if let Some(p) = &prev {
                assert!(p.iter().zip(&st.best_sim).all(|(a, b)| b >= a));
            }
            prev = Some(st.best_sim);
        }
    }
}

#[test]
fn constant_weights_do_not_change_the_batch() {
    let mut r = common::rng(3);
    let m = common::gaussian_matrix(&mut r, 30, 4);
    let cands: Vec<usize> = (5..30).collect();
    let cfg = KernelConfig { kind: KernelKind::Rbf, bandwidth: Bandwidth::Median };
    let plain = greedy_cover(&m, &cands, &[0, 1], 5, None, &cfg).unwrap();
    for c in [0.3, 1.0, 17.0] {
        let w = vec![c; cands.len()];
        assert_eq!(greedy_cover(&m, &cands, &[0, 1], 5, Some(&w), &cfg).unwrap(), plain);
    }
    assert_eq!(greedy_cover(&m, &cands[..3], &[], 4, None, &cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn refine_select_covers_both_clusters() {
    let mut rows = Vec::new();
    let mut r = common::rng(4);
    for c in [0.0, 6.0] {
        for _ in 0..12 {
            rows.push(vec![c + r.random_range(-0.3..0.3), r.random_range(-0.3..0.3)]);
        }
    }
    let m = EmbeddingMatrix::from_rows(&rows).unwrap();
    // The head only looks at the second feature, so both blobs carry the
    // same spread of uncertainty.
    let head = LinearHead { weights: vec![0.0, 0.0, 0.0, 2.0], bias: vec![0.0, 0.0], n_classes: 2, n_dims: 2 };
    let ctx = common::context(&m, head);
    let refined: Vec<usize> = (0..24).collect();
    let b = refine_select(&ctx, &refined, 2, &CoverageConfig::default()).unwrap();
    assert!(b.indices()[0] < 12 && b.indices()[1] >= 12, "{:?}", b.indices());
    let exact = refine_select(&ctx, &[3, 17], 2, &CoverageConfig::default()).unwrap();
    assert_eq!(exact.indices(), &[3, 17]);
}

#[test]
fn fully_certain_pool_matches_unweighted() {
    let mut r = common::rng(5);
    let m = common::gaussian_matrix(&mut r, 20, 2);
    // Huge weights saturate every prediction to margin 1.
    let head = LinearHead { weights: vec![0.0, 0.0, 1e6, 0.0], bias: vec![0.0, 1e3], n_classes: 2, n_dims: 2 };
    let ctx = common::context(&m, head);
    let pool: Vec<usize> = (0..20).collect();
    let weighted = refine_select(&ctx, &pool, 4, &CoverageConfig::default()).unwrap();
    let plain = refine_select(&ctx, &pool, 4, &CoverageConfig { uncertainty: false, ..Default::default() }).unwrap();
    assert_eq!(weighted, plain);
}
