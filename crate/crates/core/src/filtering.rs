//! Progressive filtering: repeated rounds in which every ensemble member picks
//! `J` batches from fresh random subsamples of the current candidate pool,
//! and the union of all picked batches becomes the next pool.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::rng::{self, StreamRng};
use crate::strategies::{Strategy, StrategyContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Number of rounds R.
    pub rounds: usize,
    /// Batches per strategy per round J.
    pub batches_per_strategy: usize,
    /// Subsample ratio alpha in (0, 1).
    #[serde(rename = "alpha")]
    pub sample_ratio: f64,
    /// Batch size b; the AL loop overwrites this with its own b.
    pub batch_size: usize,
    /// Smallest acceptable refined pool; defaults to b.
    pub min_pool: Option<usize>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            rounds: 5,
            batches_per_strategy: 10,
            sample_ratio: 0.4,
            batch_size: 10,
            min_pool: None,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(usage!("filter rounds must be at least 1"));
        }
        if self.batches_per_strategy == 0 {
            return Err(usage!("batches per strategy must be at least 1"));
        }
        if !(self.sample_ratio > 0.0 && self.sample_ratio < 1.0) {
            return Err(usage!("sample ratio must lie in (0, 1), got {}", self.sample_ratio));
        }
        if self.batch_size == 0 {
            return Err(usage!("batch size must be at least 1"));
        }
        Ok(())
    }

    pub fn min_pool(&self) -> usize {
        self.min_pool.unwrap_or(self.batch_size)
    }
}

/// Sorted, duplicate-free refined pool `C_r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub indices: Vec<usize>,
    pub round: usize,
}

impl CandidatePool {
    pub fn initial(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices, round: 0 }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub strategy: String,
    pub member: usize,
    pub j: usize,
    pub seed: u64,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    /// Size of the union produced by this round.
    pub size: usize,
    pub batches: Vec<BatchRecord>,
}

/// Audit log of one progressive filtering run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FilterTrace {
    pub initial_size: usize,
    /// Accepted rounds only.
    pub rounds: Vec<RoundTrace>,
    /// Round whose union fell below `min_pool` and was discarded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discarded_round: Option<usize>,
}

impl FilterTrace {
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.initial_size)
            .chain(self.rounds.iter().map(|r| r.size))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Subsample size `max(b, ceil(alpha * n))`, capped at `n`.
pub fn subsample_size(n: usize, alpha: f64, b: usize) -> usize {
    let scaled = (alpha * n as f64 - 1e-9).ceil().max(0.0) as usize;
    scaled.max(b).min(n)
}

/// Uniform sample without replacement of `subsample_size(|pool|, alpha, b)`
/// indices, returned sorted.
pub fn subsample<R: Rng + ?Sized>(pool: &[usize], alpha: f64, b: usize, rng: &mut R) -> Vec<usize> {
    let k = subsample_size(pool.len(), alpha, b);
    let mut out: Vec<usize> = sample(rng, pool.len(), k).into_iter().map(|p| pool[p]).collect();
    out.sort_unstable();
    out
}

/// Seed for the stream of (cycle, round, member, batch).
pub fn batch_seed(master_seed: u64, cycle: usize, round: usize, member: usize, j: usize) -> u64 {
    rng::derive_seed(
        master_seed,
        &[rng::tag::FILTER, cycle as u64, round as u64, member as u64, j as u64],
    )
}

/// One round: `C_r = U_m U_j s_m(SubSample(C_{r-1}), b)`. The `M * J`
/// selections run in parallel on the current rayon pool; each draws its
/// subsample and makes its choices from a private stream.
#[allow(clippy::too_many_arguments)]
pub fn filter_round<S: Strategy>(
    prev: &CandidatePool,
    ensemble: &[S],
    cfg: &FilterConfig,
    ctx: &StrategyContext,
    master_seed: u64,
    cycle: usize,
    round: usize,
) -> Result<(CandidatePool, RoundTrace)> {
    cfg.validate()?;
    let b = cfg.batch_size;
    if prev.len() < b {
        return Err(usage!("pool of {} is smaller than batch size {b}", prev.len()));
    }
    if ensemble.is_empty() {
        return Err(usage!("the ensemble is empty"));
    }
    let j_count = cfg.batches_per_strategy;
    let jobs: Vec<(usize, usize)> = (0..ensemble.len())
        .flat_map(|m| (0..j_count).map(move |j| (m, j)))
        .collect();
    let results: Vec<Result<BatchRecord>> = jobs
        .par_iter()
        .map(|&(m, j)| {
            let seed = batch_seed(master_seed, cycle, round, m, j);
            let mut stream: StreamRng = rand::SeedableRng::seed_from_u64(seed);
            let sub = subsample(&prev.indices, cfg.sample_ratio, b, &mut stream);
            let strategy = &ensemble[m];
            let batch = strategy
                .select(ctx, &sub, b, &mut stream)
                .map_err(|e| Error::Strategy {
                    strategy: strategy.name(),
                    member: m,
                    batch: j,
                    source: Box::new(e),
                })?;
            if batch.len() != b || batch.indices().iter().any(|i| sub.binary_search(i).is_err()) {
                return Err(Error::Strategy {
                    strategy: strategy.name(),
                    member: m,
                    batch: j,
                    source: Box::new(usage!("batch violates the size/subset contract")),
                });
            }
            Ok(BatchRecord {
                strategy: strategy.name(),
                member: m,
                j,
                seed,
                indices: batch.into_vec(),
            })
        })
        .collect();
    let batches = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut union: Vec<usize> = batches.iter().flat_map(|r| r.indices.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let trace = RoundTrace {
        round,
        size: union.len(),
        batches,
    };
    Ok((CandidatePool { indices: union, round }, trace))
}

/// Run up to `cfg.rounds` rounds from `C_0 = unlabeled`.
///
/// Stops early when the current pool holds at most `b` instances, or when a
/// round's union would fall below `min_pool`; that round is discarded and the
/// previous pool returned.
pub fn progressive_filter<S: Strategy>(
    unlabeled: &[usize],
    ensemble: &[S],
    cfg: &FilterConfig,
    ctx: &StrategyContext,
    master_seed: u64,
    cycle: usize,
) -> Result<(CandidatePool, FilterTrace)> {
    cfg.validate()?;
    let b = cfg.batch_size;
    let mut pool = CandidatePool::initial(unlabeled.to_vec());
    if pool.len() < b {
        return Err(usage!("unlabeled pool of {} is smaller than batch size {b}", pool.len()));
    }
    let mut trace = FilterTrace {
        initial_size: pool.len(),
        ..Default::default()
    };
    for round in 1..=cfg.rounds {
        if pool.len() <= b {
            break;
        }
        let (next, rt) = filter_round(&pool, ensemble, cfg, ctx, master_seed, cycle, round)?;
        if next.len() < cfg.min_pool() {
            trace.discarded_round = Some(round);
            break;
        }
        pool = next;
        trace.rounds.push(rt);
    }
    Ok((pool, trace))
}
