//! k-means++ seeding and Lloyd iterations over flat row-major point buffers.

use rand::Rng;

pub const MAX_LLOYD_ITERS: usize = 50;
pub const SHIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Clustering {
    /// Row-major k x dim.
    pub centroids: Vec<f64>,
    pub assignments: Vec<usize>,
    pub k: usize,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |(_, &a)| a == cluster)
            .map(|(i, _)| i)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Draw an index with probability proportional to `weights`. Returns `None`
/// when the total mass is zero.
pub fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last_positive
}

/// k-means++ seeding: first seed uniform, then D^2 sampling. Falls back to the
/// lowest unchosen index when all remaining mass is zero (duplicate points).
pub fn kmeans_pp<R: Rng + ?Sized>(points: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len() / dim;
    assert!(k >= 1 && k <= n, "k-means++ needs 1 <= k <= n");
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut seeds = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(seeds[0]))).collect();
    while seeds.len() < k {
        for &s in &seeds {
            d2[s] = 0.0;
        }
        let next = sample_weighted(&d2, rng)
            .unwrap_or_else(|| (0..n).find(|i| !seeds.contains(i)).unwrap());
        seeds.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), row(next)));
        }
    }
    seeds
}

fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Assign every point to its nearest centroid, then hand each empty cluster
/// the point farthest from its own centroid (lowest index on ties) among
/// clusters that can spare one.
fn assign(points: &[f64], dim: usize, centroids: &[f64], assignments: &mut [usize]) -> Vec<usize> {
    let n = assignments.len();
    let k = centroids.len() / dim;
    let mut dists = vec![0.0; n];
    let mut counts = vec![0usize; k];
    for i in 0..n {
        let (c, d) = nearest(&points[i * dim..(i + 1) * dim], centroids, dim);
        assignments[i] = c;
        dists[i] = d;
        counts[c] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for i in 0..n {
            if counts[assignments[i]] > 1 && far.is_none_or(|f| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        if let Some(f) = far {
            counts[assignments[f]] -= 1;
            assignments[f] = c;
            dists[f] = 0.0;
            counts[c] = 1;
        }
    }
    counts
}

/// Lloyd's algorithm from a k-means++ start. Stops after
/// [`MAX_LLOYD_ITERS`] iterations or when no centroid moves more than
/// [`SHIFT_TOL`]. Empty clusters are re-seeded at the farthest point.
pub fn kmeans<R: Rng + ?Sized>(points: &[f64], dim: usize, k: usize, rng: &mut R) -> Clustering {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let seeds = kmeans_pp(points, dim, k, rng);
    let mut centroids: Vec<f64> = seeds.iter().flat_map(|&s| row(s).iter().copied()).collect();
    let mut assignments = vec![0usize; n];

    for _ in 0..MAX_LLOYD_ITERS {
        let counts = assign(points, dim, &centroids, &mut assignments);
        let mut sums = vec![0.0; k * dim];
        for i in 0..n {
            let c = assignments[i];
            for (s, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += v;
            }
        }
        let mut max_shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let mut shift = 0.0;
            for (cv, &s) in centroids[c * dim..(c + 1) * dim]
                .iter_mut()
                .zip(&sums[c * dim..(c + 1) * dim])
            {
                let nv = s * inv;
                shift += (nv - *cv) * (nv - *cv);
                *cv = nv;
            }
            max_shift = max_shift.max(shift.sqrt());
        }
        if max_shift < SHIFT_TOL {
            break;
        }
    }
    assign(points, dim, &centroids, &mut assignments);
    Clustering {
        centroids,
        assignments,
        k,
    }
}
