use super::{canonical_pool, gather_f64, Batch, StrategyContext};
use crate::error::Result;
use crate::kmeans::{kmeans, sq_dist};
use crate::rng::StreamRng;

pub const DEFAULT_KNN: usize = 20;

/// Inverse mean distance to the `min(knn, n - 1)` nearest other members.
/// A lone member is maximally typical.
pub fn typicality(members: &[f64], dim: usize, idx: usize, knn: usize) -> f64 {
    let n = members.len() / dim;
    let k = knn.min(n.saturating_sub(1));
    if k == 0 {
        return f64::INFINITY;
    }
    let me = &members[idx * dim..(idx + 1) * dim];
    let mut d: Vec<f64> = (0..n)
        .filter(|&j| j != idx)
        .map(|j| sq_dist(me, &members[j * dim..(j + 1) * dim]).sqrt())
        .collect();
    d.select_nth_unstable_by(k - 1, f64::total_cmp);
    let mean = d[..k].iter().sum::<f64>() / k as f64;
    if mean == 0.0 {
        f64::INFINITY
    } else {
        1.0 / mean
    }
}

/// k-means with `k = |L| + b` over pool and labeled features; from the `b`
/// largest clusters that hold no labeled instance, take each cluster's most
/// typical pool point.
pub fn select_typiclust(ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
    select_typiclust_with(ctx, pool, b, rng, DEFAULT_KNN)
}

pub(super) fn select_typiclust_with(
    ctx: &StrategyContext,
    pool: &[usize],
    b: usize,
    rng: &mut StreamRng,
    knn: usize,
) -> Result<Batch> {
    let pool = canonical_pool(ctx, pool, b)?;
    let mut points: Vec<usize> = pool.iter().chain(&ctx.labeled).copied().collect();
    points.sort_unstable();
    points.dedup();
    let is_pool = |i: usize| pool.binary_search(&i).is_ok();
    let is_labeled: Vec<bool> = points
        .iter()
        .map(|&i| ctx.labeled.contains(&i) && !is_pool(i))
        .collect();
    let dim = ctx.embeddings.n_dims();
    let feats = gather_f64(ctx.embeddings, &points);
    let k = (ctx.labeled.len() + b).min(points.len());
    let clustering = kmeans(&feats, dim, k, rng);

    struct Cluster {
        members: Vec<usize>,
        has_labeled: bool,
    }
    let mut clusters: Vec<Cluster> = (0..k)
        .map(|c| {
            let members: Vec<usize> = clustering.members(c).collect();
            let has_labeled = members.iter().any(|&p| is_labeled[p]);
            Cluster { members, has_labeled }
        })
        .filter(|c| !c.members.is_empty())
        .collect();
    // Uncovered first, then by size, then by lowest member.
    clusters.sort_by(|a, b| {
        a.has_labeled
            .cmp(&b.has_labeled)
            .then(b.members.len().cmp(&a.members.len()))
            .then(a.members[0].cmp(&b.members[0]))
    });

    // Pool points of each cluster ordered by decreasing typicality.
    let ranked: Vec<Vec<usize>> = clusters
        .iter()
        .map(|c| {
            let local = gather_f64(ctx.embeddings, &c.members.iter().map(|&p| points[p]).collect::<Vec<_>>());
            let mut scored: Vec<(f64, usize)> = c
                .members
                .iter()
                .enumerate()
                .filter(|(_, &p)| !is_labeled[p])
                .map(|(li, &p)| (typicality(&local, dim, li, knn), points[p]))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            scored.into_iter().map(|(_, i)| i).collect()
        })
        .collect();

    // One pick per cluster in priority order; further passes only when fewer
    // than b clusters contain pool points.
    let mut out = Vec::with_capacity(b);
    let mut depth = 0;
    while out.len() < b {
        for r in &ranked {
            if out.len() == b {
                break;
            }
            if let Some(&i) = r.get(depth) {
                out.push(i);
            }
        }
        depth += 1;
    }
    Ok(Batch::new(out))
}
