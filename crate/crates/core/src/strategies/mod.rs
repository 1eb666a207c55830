//! Batch query strategies: each maps (context, pool, b, rng) to exactly `b`
//! distinct indices drawn from the pool.
//!
//! Pools are canonicalized to ascending index order before any work, so ties
//! (always broken toward the lowest index) and rng consumption do not depend
//! on how the caller ordered the pool.

mod badge;
mod bait;
mod coreset;
mod herding;
mod margin;
mod perturbation;
mod random;
mod typiclust;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingMatrix, LabelVector, PoolState};
use crate::error::{usage, Error, Result};
use crate::model::{predict_proba, train_head, LinearHead, TrainConfig};
use crate::rng::StreamRng;

pub use badge::select_badge;
pub use bait::select_bait;
pub use coreset::select_coreset;
pub use herding::{select_maxherding, select_uherding};
pub use margin::select_margin;
pub use perturbation::{flips_under_mixing, select_alfamix, select_dropquery};
pub use random::select_random;
pub use typiclust::{select_typiclust, typicality};

/// Sorted, distinct instance indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Batch {
    indices: Vec<usize>,
}

impl Batch {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.indices
    }
}

/// Everything a strategy may look at: features, the labeled set with its
/// labels, and the head trained on exactly that labeled set. Probabilities
/// for every instance are computed once on construction.
#[derive(Debug, Clone)]
pub struct StrategyContext<'a> {
    pub embeddings: &'a EmbeddingMatrix,
    pub labeled: Vec<usize>,
    pub labeled_labels: Vec<u32>,
    pub n_classes: usize,
    pub head: LinearHead,
    probs: Vec<f64>,
}

impl<'a> StrategyContext<'a> {
    pub fn new(
        embeddings: &'a EmbeddingMatrix,
        labeled: Vec<usize>,
        labeled_labels: Vec<u32>,
        head: LinearHead,
    ) -> Result<Self> {
        if labeled.len() != labeled_labels.len() {
            return Err(usage!(
                "{} labeled indices but {} labels",
                labeled.len(),
                labeled_labels.len()
            ));
        }
        let all: Vec<usize> = (0..embeddings.n_instances()).collect();
        let probs = predict_proba(&head, embeddings, &all)?.values;
        Ok(Self {
            embeddings,
            labeled,
            labeled_labels,
            n_classes: head.n_classes,
            head,
            probs,
        })
    }

    /// Train a head on the labeled part of `pool` and wrap it in a context.
    pub fn train(
        embeddings: &'a EmbeddingMatrix,
        labels: &LabelVector,
        pool: &PoolState,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        let labeled = pool.labeled();
        let y: Vec<u32> = labeled.iter().map(|&i| labels.get(i)).collect();
        let head = train_head(embeddings, &labeled, &y, labels.n_classes(), cfg)?;
        Self::new(embeddings, labeled, y, head)
    }

    pub fn proba(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn margin(&self, i: usize) -> f64 {
        crate::model::margin_of(self.proba(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Random,
    Margin,
    Typiclust,
    Badge,
    Bait,
    Alfamix,
    Dropquery,
    Maxherding,
    Uherding,
    Coreset,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 10] = [
        StrategyKind::Random,
        StrategyKind::Margin,
        StrategyKind::Typiclust,
        StrategyKind::Badge,
        StrategyKind::Bait,
        StrategyKind::Alfamix,
        StrategyKind::Dropquery,
        StrategyKind::Maxherding,
        StrategyKind::Uherding,
        StrategyKind::Coreset,
    ];

    /// The default filtering ensemble: every benchmark strategy except random
    /// and coreset.
    pub const ENSEMBLE: [StrategyKind; 8] = [
        StrategyKind::Margin,
        StrategyKind::Typiclust,
        StrategyKind::Badge,
        StrategyKind::Bait,
        StrategyKind::Alfamix,
        StrategyKind::Dropquery,
        StrategyKind::Maxherding,
        StrategyKind::Uherding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Margin => "margin",
            StrategyKind::Typiclust => "typiclust",
            StrategyKind::Badge => "badge",
            StrategyKind::Bait => "bait",
            StrategyKind::Alfamix => "alfamix",
            StrategyKind::Dropquery => "dropquery",
            StrategyKind::Maxherding => "maxherding",
            StrategyKind::Uherding => "uherding",
            StrategyKind::Coreset => "coreset",
        }
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            StrategyKind::Typiclust => &["knn"],
            StrategyKind::Alfamix => &["eps_mix"],
            StrategyKind::Dropquery => &["n_masks", "rate"],
            StrategyKind::Maxherding | StrategyKind::Uherding => &["bandwidth"],
            _ => &[],
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let known: Vec<_> = StrategyKind::ALL.iter().map(|k| k.name()).collect();
                usage!("unknown strategy {s:?}; expected one of {}", known.join(", "))
            })
    }
}

/// A strategy kind plus its numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl From<StrategyKind> for StrategySpec {
    fn from(kind: StrategyKind) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
        }
    }
}

impl StrategySpec {
    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = self.kind.allowed_params();
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(usage!(
                "strategy {} does not take parameter {k:?} (allowed: {:?})",
                self.kind,
                allowed
            ));
        }
        let p = |k: &str| self.params.get(k).copied();
        if let Some(e) = p("eps_mix") {
            if !(0.0..=1.0).contains(&e) {
                return Err(usage!("eps_mix must lie in [0, 1], got {e}"));
            }
        }
        if let Some(r) = p("rate") {
            if !(0.0..1.0).contains(&r) {
                return Err(usage!("dropout rate must lie in [0, 1), got {r}"));
            }
        }
        for key in ["n_masks", "knn"] {
            if let Some(v) = p(key) {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(usage!("{key} must be a positive integer, got {v}"));
                }
            }
        }
        if let Some(bw) = p("bandwidth") {
            if !(bw > 0.0 && bw.is_finite()) {
                return Err(usage!("bandwidth must be positive, got {bw}"));
            }
        }
        Ok(())
    }
}

/// Anything that can fill a batch; the filtering loop is generic over this.
pub trait Strategy: Send + Sync {
    fn name(&self) -> String;

    fn select(&self, ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch>;
}

impl Strategy for StrategySpec {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn select(&self, ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
        self.validate()?;
        match self.kind {
            StrategyKind::Random => select_random(ctx, pool, b, rng),
            StrategyKind::Margin => select_margin(ctx, pool, b, rng),
            StrategyKind::Typiclust => {
                typiclust::select_typiclust_with(ctx, pool, b, rng, self.param("knn", 20.0) as usize)
            }
            StrategyKind::Badge => select_badge(ctx, pool, b, rng),
            StrategyKind::Bait => select_bait(ctx, pool, b, rng),
            StrategyKind::Alfamix => {
                perturbation::select_alfamix_with(ctx, pool, b, rng, self.param("eps_mix", 0.2))
            }
            StrategyKind::Dropquery => perturbation::select_dropquery_with(
                ctx,
                pool,
                b,
                rng,
                self.param("n_masks", 10.0) as usize,
                self.param("rate", 0.5),
            ),
            StrategyKind::Maxherding => herding::herding(ctx, pool, b, false, self.params.get("bandwidth").copied()),
            StrategyKind::Uherding => herding::herding(ctx, pool, b, true, self.params.get("bandwidth").copied()),
            StrategyKind::Coreset => select_coreset(ctx, pool, b, rng),
        }
    }
}

impl<T: Strategy + ?Sized> Strategy for Box<T> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn select(&self, ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
        (**self).select(ctx, pool, b, rng)
    }
}

impl<T: Strategy + ?Sized> Strategy for &T {
    fn name(&self) -> String {
        (**self).name()
    }

    fn select(&self, ctx: &StrategyContext, pool: &[usize], b: usize, rng: &mut StreamRng) -> Result<Batch> {
        (**self).select(ctx, pool, b, rng)
    }
}

/// Sorted, deduplicated copy of `pool` after checking `1 <= b <= |pool|`.
pub(crate) fn canonical_pool(ctx: &StrategyContext, pool: &[usize], b: usize) -> Result<Vec<usize>> {
    if b == 0 {
        return Err(usage!("batch size must be at least 1"));
    }
    let mut p = pool.to_vec();
    p.sort_unstable();
    p.dedup();
    if p.len() < b {
        return Err(usage!("pool of {} instances is smaller than batch size {b}", p.len()));
    }
    if let Some(&i) = p.last().filter(|&&i| i >= ctx.embeddings.n_instances()) {
        return Err(usage!("pool index {i} is out of range"));
    }
    Ok(p)
}

/// Row-major f64 copy of the given rows.
pub(crate) fn gather_f64(m: &EmbeddingMatrix, rows: &[usize]) -> Vec<f64> {
    rows.iter()
        .flat_map(|&i| m.row(i).iter().map(|&v| v as f64))
        .collect()
}

/// `b` pool indices with the smallest margin, ties to the lowest index.
pub(crate) fn smallest_margin(ctx: &StrategyContext, sorted_pool: &[usize], b: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = sorted_pool.iter().map(|&i| (ctx.margin(i), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(b).map(|(_, i)| i).collect()
}
