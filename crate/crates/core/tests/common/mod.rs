#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use refine::coverage::rbf;
use refine::data::EmbeddingMatrix;
use refine::filtering::{progressive_filter, FilterConfig};
use refine::model::{loss_and_grad, LinearHead};
use refine::rng::{self, StreamRng};
use refine::strategies::{StrategyContext, StrategyKind, StrategySpec};

pub fn rng(seed: u64) -> StreamRng {
    rng::stream(seed, &[0xACCE])
}

pub fn gaussian_matrix(r: &mut StreamRng, n: usize, d: usize) -> EmbeddingMatrix {
    let values = (0..n * d).map(|_| r.sample::<f32, _>(StandardNormal)).collect();
    EmbeddingMatrix::new(n, d, values).unwrap()
}

pub fn random_head(r: &mut StreamRng, k: usize, d: usize, scale: f64) -> LinearHead {
    let mut h = LinearHead::zeros(k, d);
    for w in h.weights.iter_mut().chain(h.bias.iter_mut()) {
        *w = scale * r.sample::<f64, _>(StandardNormal);
    }
    h
}

/// Context with an untrained (random) head and no labeled instances.
pub fn context(m: &EmbeddingMatrix, head: LinearHead) -> StrategyContext<'_> {
    StrategyContext::new(m, vec![], vec![], head).unwrap()
}

pub fn labeled_context(m: &EmbeddingMatrix, head: LinearHead, labeled: Vec<usize>) -> StrategyContext<'_> {
    let y = labeled.iter().map(|&i| (i % head.n_classes) as u32).collect();
    StrategyContext::new(m, labeled, y, head).unwrap()
}

/// Every `k`-subset of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Weighted coverage of `targets` by `covered`, from scratch.
pub fn weighted_coverage(m: &EmbeddingMatrix, targets: &[usize], weights: &[f64], covered: &[usize], sigma: f64) -> f64 {
    targets
        .iter()
        .zip(weights)
        .map(|(&t, &w)| w * covered.iter().map(|&c| rbf(m.sq_dist(t, c), sigma)).fold(0.0, f64::max))
        .sum()
}

/// Worst relative error between analytic and central-difference gradients of
/// the regularized cross-entropy over every weight and bias.
pub fn gradient_check(r: &mut StreamRng, k: usize, d: usize, n: usize) -> f64 {
    let m = gaussian_matrix(r, n, d);
    let head = random_head(r, k, d, 0.5);
    let rows: Vec<usize> = (0..n).collect();
    let labels: Vec<u32> = (0..n).map(|_| r.random_range(0..k as u32)).collect();
    let wd = 1e-2;
    let g = loss_and_grad(&head, &m, &rows, &labels, wd);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let n_w = head.weights.len();
    for p in 0..n_w + head.bias.len() {
        let bump = |delta: f64| {
            let mut hh = head.clone();
            if p < n_w {
                hh.weights[p] += delta;
            } else {
                hh.bias[p - n_w] += delta;
            }
            loss_and_grad(&hh, &m, &rows, &labels, wd).loss
        };
        let numeric = (bump(h) - bump(-h)) / (2.0 * h);
        let analytic = if p < n_w { g.grad_weights[p] } else { g.grad_bias[p - n_w] };
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

/// Members cheap enough to run hundreds of filter configurations.
pub const FAST_MEMBERS: [StrategyKind; 7] = [
    StrategyKind::Random,
    StrategyKind::Margin,
    StrategyKind::Bait,
    StrategyKind::Badge,
    StrategyKind::Coreset,
    StrategyKind::Maxherding,
    StrategyKind::Typiclust,
];

/// Randomized filter instance: data, head, ensemble and hyperparameters.
pub struct FilterCase {
    pub m: EmbeddingMatrix,
    pub head: LinearHead,
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub ensemble: Vec<StrategySpec>,
    pub cfg: FilterConfig,
    pub seed: u64,
}

pub fn filter_case(seed: u64) -> FilterCase {
    let mut r = rng(seed);
    let n = r.random_range(30..90);
    let d = r.random_range(2..6);
    let k = r.random_range(2..5);
    let m = gaussian_matrix(&mut r, n, d);
    let head = random_head(&mut r, k, d, 1.0);
    let n_lab = r.random_range(0..5);
    let labeled: Vec<usize> = (0..n_lab).collect();
    let unlabeled: Vec<usize> = (n_lab..n).collect();
    let n_members = r.random_range(1..4);
    let ensemble = (0..n_members)
        .map(|_| StrategySpec::from(FAST_MEMBERS[r.random_range(0..FAST_MEMBERS.len())]))
        .collect();
    let b = r.random_range(1..8);
    let cfg = FilterConfig {
        rounds: r.random_range(1..5),
        batches_per_strategy: r.random_range(1..5),
        sample_ratio: r.random_range(0.1..0.9),
        batch_size: b,
        min_pool: if r.random::<bool>() { None } else { Some(b + r.random_range(0..10)) },
    };
    FilterCase { m, head, labeled, unlabeled, ensemble, cfg, seed }
}

/// Run one case and check nesting, the size floor and provenance against the
/// trace. Returns the refined pool.
pub fn check_filter_case(case: &FilterCase) -> Result<Vec<usize>, String> {
    let ctx = labeled_context(&case.m, case.head.clone(), case.labeled.clone());
    let (pool, trace) = progressive_filter(&case.unlabeled, &case.ensemble, &case.cfg, &ctx, case.seed, 0)
        .map_err(|e| format!("seed {}: {e}", case.seed))?;
    let b = case.cfg.batch_size;
    if pool.len() < b {
        return Err(format!("seed {}: returned pool {} < b {b}", case.seed, pool.len()));
    }
    let mut prev = case.unlabeled.clone();
    for rt in &trace.rounds {
        let mut union: Vec<usize> = rt.batches.iter().flat_map(|br| br.indices.iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        if union.len() != rt.size {
            return Err(format!("seed {}: round {} size disagrees with its batches", case.seed, rt.round));
        }
        if let Some(x) = union.iter().find(|x| prev.binary_search(x).is_err()) {
            return Err(format!("seed {}: round {} kept {x} not in the previous pool", case.seed, rt.round));
        }
        if rt.batches.len() != case.ensemble.len() * case.cfg.batches_per_strategy {
            return Err(format!("seed {}: round {} is missing batches", case.seed, rt.round));
        }
        prev = union;
    }
    if prev != pool.indices {
        return Err(format!("seed {}: returned pool is not the last accepted union", case.seed));
    }
    Ok(pool.indices)
}

pub fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

pub fn max_threads() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get()).max(3)
}
