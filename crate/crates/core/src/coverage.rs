//! Coverage-based batch selection: greedy maximization of the mean, over a
//! target set, of each target's best kernel similarity to the labeled set
//! plus the chosen batch. Optional per-target weights turn this into the
//! uncertainty-weighted (UHerding) variant.

use serde::{Deserialize, Serialize};

use crate::data::{sq_dist, EmbeddingMatrix};
use crate::error::{data_err, usage, Result};
use crate::model::margin_of;
use crate::strategies::{Batch, StrategyContext};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Rbf,
}

/// RBF bandwidth: median pairwise distance of the target set, or fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Median,
    Fixed(f64),
}

impl Serialize for Bandwidth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Median => s.serialize_str("median"),
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "median" => Ok(Bandwidth::Median),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "bandwidth must be \"median\" or a positive number, got {s:?}"
            ))),
            Raw::Value(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
            Raw::Value(v) => Err(serde::de::Error::custom(format!(
                "fixed bandwidth must be positive, got {v}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub bandwidth: Bandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageConfig {
    pub kernel: KernelKind,
    pub bandwidth: Bandwidth,
    /// Weight each target by its mean-normalized uncertainty `1 - margin`.
    pub uncertainty: bool,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Rbf,
            bandwidth: Bandwidth::Median,
            uncertainty: true,
        }
    }
}

impl CoverageConfig {
    pub fn kernel_config(&self) -> KernelConfig {
        KernelConfig {
            kind: self.kernel,
            bandwidth: self.bandwidth,
        }
    }
}

#[inline]
pub fn rbf(sq_distance: f64, sigma: f64) -> f64 {
    (-sq_distance / (2.0 * sigma * sigma)).exp()
}

/// `exp(-||x - x'||^2 / (2 sigma^2))` with a resolved (fixed) bandwidth.
pub fn kernel(x: &[f32], y: &[f32], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(data_err!("kernel arguments differ in dimension"));
    }
    if !(sigma > 0.0) {
        return Err(data_err!("kernel bandwidth must be positive, got {sigma}"));
    }
    Ok(rbf(sq_dist(x, y), sigma))
}

/// Median Euclidean distance over all unordered pairs of `targets`.
/// A single target has no pairs and gets bandwidth 1.
pub fn median_pairwise_distance(m: &EmbeddingMatrix, targets: &[usize]) -> Result<f64> {
    if targets.len() < 2 {
        return Ok(1.0);
    }
    let mut d = Vec::with_capacity(targets.len() * (targets.len() - 1) / 2);
    for (a, &i) in targets.iter().enumerate() {
        for &j in &targets[a + 1..] {
            d.push(m.sq_dist(i, j));
        }
    }
    let mid = d.len() / 2;
    let median_sq = if d.len() % 2 == 1 {
        *d.select_nth_unstable_by(mid, f64::total_cmp).1
    } else {
        let hi = *d.select_nth_unstable_by(mid, f64::total_cmp).1;
        let lo = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo.sqrt() + hi.sqrt()).powi(2)
    };
    let sigma = median_sq.sqrt();
    if sigma == 0.0 {
        return Err(data_err!(
            "median pairwise distance is zero; the target points coincide"
        ));
    }
    Ok(sigma)
}

pub fn resolve_bandwidth(m: &EmbeddingMatrix, targets: &[usize], cfg: &KernelConfig) -> Result<f64> {
    match cfg.bandwidth {
        Bandwidth::Fixed(s) if s > 0.0 => Ok(s),
        Bandwidth::Fixed(s) => Err(usage!("fixed bandwidth must be positive, got {s}")),
        Bandwidth::Median => median_pairwise_distance(m, targets),
    }
}

/// Mean over `targets` of the best similarity to any point of `covered_by`;
/// zero when `covered_by` is empty.
pub fn coverage_value(m: &EmbeddingMatrix, targets: &[usize], covered_by: &[usize], sigma: f64) -> Result<f64> {
    if targets.is_empty() {
        return Err(usage!("coverage needs at least one target"));
    }
    if covered_by.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = targets
        .iter()
        .map(|&t| {
            covered_by
                .iter()
                .map(|&c| rbf(m.sq_dist(t, c), sigma))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / targets.len() as f64)
}

/// Greedy state: per-target best similarity, selection order and weights.
#[derive(Debug, Clone)]
pub struct CoverageState {
    pub targets: Vec<usize>,
    pub best_sim: Vec<f64>,
    pub selected: Vec<usize>,
    pub weights: Vec<f64>,
    /// Weighted marginal gain realized at each greedy step.
    pub gains: Vec<f64>,
}

const TIE_TOL: f64 = 1e-12;

struct GreedyCover {
    /// Sorted candidates; also the target set.
    cands: Vec<usize>,
    weights: Vec<f64>,
    /// Row-major |cands| x |cands|, symmetric.
    kmat: Vec<f64>,
    best: Vec<f64>,
    taken: Vec<bool>,
}

impl GreedyCover {
    fn new(
        m: &EmbeddingMatrix,
        candidates: &[usize],
        labeled: &[usize],
        weights: Option<&[f64]>,
        sigma: f64,
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by_key(|&o| candidates[o]);
        let cands: Vec<usize> = order.iter().map(|&o| candidates[o]).collect();
        if cands.windows(2).any(|w| w[0] == w[1]) {
            return Err(usage!("candidate set contains duplicates"));
        }
        let weights: Vec<f64> = match weights {
            Some(w) => {
                if w.len() != candidates.len() {
                    return Err(usage!(
                        "{} weights for {} candidates",
                        w.len(),
                        candidates.len()
                    ));
                }
                if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(data_err!("coverage weights must be finite and non-negative"));
                }
                order.iter().map(|&o| w[o]).collect()
            }
            None => vec![1.0; cands.len()],
        };
        let n = cands.len();
        let mut kmat = vec![0.0; n * n];
        for a in 0..n {
            kmat[a * n + a] = 1.0;
            for c in a + 1..n {
                let v = rbf(m.sq_dist(cands[a], cands[c]), sigma);
                kmat[a * n + c] = v;
                kmat[c * n + a] = v;
            }
        }
        let best = cands
            .iter()
            .map(|&t| {
                labeled
                    .iter()
                    .map(|&l| rbf(m.sq_dist(t, l), sigma))
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(Self {
            taken: vec![false; n],
            cands,
            weights,
            kmat,
            best,
        })
    }

    fn gain(&self, c: usize) -> f64 {
        let n = self.cands.len();
        let col = &self.kmat[c * n..(c + 1) * n];
        col.iter()
            .zip(&self.best)
            .zip(&self.weights)
            .map(|((&k, &b), &w)| w * (k - b).max(0.0))
            .sum()
    }

    /// Position of the best remaining candidate; lowest index on ties, where
    /// gains within a relative `TIE_TOL` count as tied.
    fn argmax(&self) -> (usize, f64) {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..self.cands.len() {
            if self.taken[c] {
                continue;
            }
            let g = self.gain(c);
            if best.is_none_or(|(_, bg)| g - bg > TIE_TOL * bg.abs().max(g.abs())) {
                best = Some((c, g));
            }
        }
        best.expect("greedy cover ran out of candidates")
    }

    fn take(&mut self, c: usize) {
        let n = self.cands.len();
        self.taken[c] = true;
        for (b, &k) in self.best.iter_mut().zip(&self.kmat[c * n..(c + 1) * n]) {
            if k > *b {
                *b = k;
            }
        }
    }
}

/// Greedy coverage maximization over `candidates` (which also serve as the
/// targets), starting from the coverage already provided by `labeled`.
pub fn greedy_cover_traced(
    m: &EmbeddingMatrix,
    candidates: &[usize],
    labeled: &[usize],
    b: usize,
    weights: Option<&[f64]>,
    sigma: f64,
) -> Result<CoverageState> {
    if b == 0 {
        return Err(usage!("batch size must be at least 1"));
    }
    if candidates.len() < b {
        return Err(usage!(
            "cannot select {b} instances from {} candidates",
            candidates.len()
        ));
    }
    let mut g = GreedyCover::new(m, candidates, labeled, weights, sigma)?;
    let mut selected = Vec::with_capacity(b);
    let mut gains = Vec::with_capacity(b);
    for _ in 0..b {
        let (c, gain) = g.argmax();
        g.take(c);
        selected.push(g.cands[c]);
        gains.push(gain);
    }
    Ok(CoverageState {
        targets: g.cands,
        best_sim: g.best,
        selected,
        weights: g.weights,
        gains,
    })
}

pub fn greedy_cover(
    m: &EmbeddingMatrix,
    candidates: &[usize],
    labeled: &[usize],
    b: usize,
    weights: Option<&[f64]>,
    cfg: &KernelConfig,
) -> Result<Batch> {
    if candidates.len() < b {
        return Err(usage!(
            "cannot select {b} instances from {} candidates",
            candidates.len()
        ));
    }
    let sigma = resolve_bandwidth(m, candidates, cfg)?;
    let state = greedy_cover_traced(m, candidates, labeled, b, weights, sigma)?;
    Ok(Batch::new(state.selected))
}

/// `1 - margin` per candidate, rescaled to mean 1. All-certain pools (every
/// margin 1) get unit weights.
pub fn uncertainty_weights(ctx: &StrategyContext, candidates: &[usize]) -> Vec<f64> {
    let raw: Vec<f64> = candidates
        .iter()
        .map(|&i| (1.0 - margin_of(ctx.proba(i))).max(0.0))
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len().max(1) as f64;
    if mean > 0.0 {
        raw.iter().map(|w| w / mean).collect()
    } else {
        vec![1.0; raw.len()]
    }
}

/// Final REFINE selection on the refined pool.
pub fn refine_select(ctx: &StrategyContext, refined: &[usize], b: usize, cfg: &CoverageConfig) -> Result<Batch> {
    let weights = cfg.uncertainty.then(|| uncertainty_weights(ctx, refined));
    greedy_cover(
        ctx.embeddings,
        refined,
        &ctx.labeled,
        b,
        weights.as_deref(),
        &cfg.kernel_config(),
    )
}
