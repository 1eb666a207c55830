//! Closed-form survival bounds for progressive filtering and Monte Carlo
//! simulators that check them.
//!
//! The simulators run the filtering control flow exactly (fresh uniform
//! subsample per strategy and batch, union per round) but replace real
//! strategies with synthetic ones: an instance present in a subsample is
//! picked by strategy `m` in round `r` with probability `p_{m,r}(x)`,
//! independently of everything else.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::filtering::subsample;
use crate::rng::{self, StreamRng};

/// Lower bound on surviving one round for an instance whose most favorable
/// strategy picks it with probability `p_max`: `1 - (1 - alpha p_max)^J`.
pub fn thm1_bound(alpha: f64, batches_per_strategy: usize, p_max: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_prob("p_max", p_max)?;
    if batches_per_strategy == 0 {
        return Err(usage!("J must be at least 1"));
    }
    Ok(1.0 - (1.0 - alpha * p_max).powi(batches_per_strategy as i32))
}

/// Upper bound on an epsilon-uninformative instance surviving `rounds`
/// rounds: `(1 - (1 - alpha eps)^(M J))^R`.
pub fn thm2_bound(alpha: f64, eps: f64, members: usize, batches_per_strategy: usize, rounds: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_prob("epsilon", eps)?;
    if members == 0 || batches_per_strategy == 0 || rounds == 0 {
        return Err(usage!("M, J and R must all be at least 1"));
    }
    let draws = (members * batches_per_strategy) as i32;
    let per_round = 1.0 - (1.0 - alpha * eps).powi(draws);
    Ok(per_round.powi(rounds as i32))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(usage!("alpha must lie in (0, 1], got {alpha}"));
    }
    Ok(())
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(usage!("{name} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

type ProbFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// Selection probability `p(instance, round)` given presence in the subsample.
#[derive(Clone)]
pub struct SyntheticStrategy {
    select_prob: Arc<ProbFn>,
}

impl std::fmt::Debug for SyntheticStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SyntheticStrategy")
    }
}

impl SyntheticStrategy {
    pub fn new(f: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            select_prob: Arc::new(f),
        }
    }

    pub fn constant(p: f64) -> Self {
        Self::new(move |_, _| p)
    }

    /// `p(x) = f(values[x])`, round-independent.
    pub fn from_values(values: Arc<[f64]>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |x, _| f(values[x]))
    }

    pub fn prob(&self, instance: usize, round: usize) -> f64 {
        (self.select_prob)(instance, round)
    }
}

/// Pool size and filtering hyperparameters for a simulation. Instances are
/// `0..pool_size`.
#[derive(Debug, Clone)]
pub struct SurvivalModel {
    pub pool_size: usize,
    pub strategies: Vec<SyntheticStrategy>,
    pub alpha: f64,
    pub batches_per_strategy: usize,
    pub rounds: usize,
    /// Subsample floor (the batch size b of the real filter).
    pub batch_floor: usize,
}

impl SurvivalModel {
    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.pool_size == 0 || self.strategies.is_empty() {
            return Err(usage!("simulation needs a non-empty pool and ensemble"));
        }
        if self.batches_per_strategy == 0 || self.rounds == 0 {
            return Err(usage!("J and R must be at least 1"));
        }
        Ok(())
    }

    /// One realization; `observe(r, pool)` sees `C_0 .. C_R`.
    fn run_trial(&self, rng: &mut StreamRng, mut observe: impl FnMut(usize, &[usize])) {
        let mut pool: Vec<usize> = (0..self.pool_size).collect();
        let mut picked = vec![false; self.pool_size];
        observe(0, &pool);
        for r in 1..=self.rounds {
            picked.iter_mut().for_each(|p| *p = false);
            if !pool.is_empty() {
                for s in &self.strategies {
                    for _ in 0..self.batches_per_strategy {
                        let floor = self.batch_floor.min(pool.len());
                        for x in subsample(&pool, self.alpha, floor, rng) {
                            if rng.random::<f64>() < s.prob(x, r) {
                                picked[x] = true;
                            }
                        }
                    }
                }
            }
            pool.retain(|&x| picked[x]);
            observe(r, &pool);
        }
    }
}

/// Binomial proportion with its standard error `sqrt(f (1 - f) / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub freq: f64,
    pub se: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (freq, se) = if trials == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let f = successes as f64 / trials as f64;
            (f, (f * (1.0 - f) / trials as f64).sqrt())
        };
        Self {
            successes,
            trials,
            freq,
            se,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSurvival {
    pub id: usize,
    /// Round r (index r - 1): survival given presence in `C_{r-1}`.
    pub per_round: Vec<Proportion>,
    /// Round r (index r - 1): presence in `C_r` over all trials.
    pub cumulative: Vec<Proportion>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivalReport {
    pub trials: usize,
    pub instances: Vec<InstanceSurvival>,
}

/// Empirical per-round and cumulative survival of the `marked` instances.
pub fn simulate_survival(model: &SurvivalModel, marked: &[usize], trials: usize, seed: u64) -> Result<SurvivalReport> {
    model.validate()?;
    if trials == 0 {
        return Err(usage!("trials must be at least 1"));
    }
    if let Some(&x) = marked.iter().find(|&&x| x >= model.pool_size) {
        return Err(usage!("marked instance {x} is outside the pool"));
    }
    let r_count = model.rounds;
    // presence[k][r] counts trials with marked[k] in C_r.
    let zero = || vec![vec![0u64; r_count + 1]; marked.len()];
    let presence = (0..trials)
        .into_par_iter()
        .fold(zero, |mut acc, t| {
            let mut stream = rng::stream(seed, &[rng::tag::TRIAL, t as u64]);
            model.run_trial(&mut stream, |r, pool| {
                for (k, x) in marked.iter().enumerate() {
                    if pool.binary_search(x).is_ok() {
                        acc[k][r] += 1;
                    }
                }
            });
            acc
        })
        .reduce(zero, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        });
    let instances = marked
        .iter()
        .zip(presence)
        .map(|(&id, counts)| InstanceSurvival {
            id,
            per_round: (1..=r_count)
                .map(|r| Proportion::new(counts[r], counts[r - 1]))
                .collect(),
            cumulative: (1..=r_count)
                .map(|r| Proportion::new(counts[r], trials as u64))
                .collect(),
        })
        .collect();
    Ok(SurvivalReport { trials, instances })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValuedInstance {
    pub id: usize,
    pub value: f64,
}

/// Trial-averaged mean pool value for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    /// Trials whose pool was non-empty at this round.
    pub n: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueReport {
    /// Rounds 0..=R.
    pub per_round: Vec<MeanEstimate>,
}

impl ValueReport {
    /// Round-over-round means never drop by more than `k` combined standard
    /// errors.
    pub fn non_decreasing_within(&self, k: f64) -> bool {
        self.per_round.windows(2).all(|w| {
            let tol = k * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt();
            w[1].mean >= w[0].mean - tol
        })
    }

    /// Round `from + 1` mean exceeds round `from` by more than `k` combined
    /// standard errors.
    pub fn strictly_increases(&self, from: usize, k: f64) -> bool {
        let (a, b) = (self.per_round[from], self.per_round[from + 1]);
        b.mean - a.mean > k * (a.se.powi(2) + b.se.powi(2)).sqrt()
    }
}

/// Estimate `E[V | C_r]` for every round under strategies whose selection
/// probabilities are non-decreasing in value. Instance `k` of `pool` is
/// simulated as instance id `k`; strategy probabilities are looked up by
/// that position.
pub fn check_value_monotonicity(
    pool: &[ValuedInstance],
    model: &SurvivalModel,
    trials: usize,
    seed: u64,
) -> Result<ValueReport> {
    model.validate()?;
    if model.pool_size != pool.len() {
        return Err(usage!("model pool size {} differs from {} valued instances", model.pool_size, pool.len()));
    }
    if trials == 0 {
        return Err(usage!("trials must be at least 1"));
    }
    if let Some(v) = pool.iter().find(|v| !v.value.is_finite()) {
        return Err(usage!("instance {} has a non-finite value", v.id));
    }
    let mut by_value: Vec<usize> = (0..pool.len()).collect();
    by_value.sort_by(|&a, &b| pool[a].value.total_cmp(&pool[b].value));
    for (m, s) in model.strategies.iter().enumerate() {
        for r in 1..=model.rounds {
            for w in by_value.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if pool[hi].value > pool[lo].value && s.prob(hi, r) < s.prob(lo, r) {
                    return Err(usage!(
                        "strategy {m} is not monotone in value at round {r} (instances {lo}, {hi})"
                    ));
                }
            }
        }
    }
    let r_count = model.rounds;
    // Per round: (sum of means, sum of squared means, non-empty trial count).
    let zero = || vec![(0.0f64, 0.0f64, 0u64); r_count + 1];
    let sums = (0..trials)
        .into_par_iter()
        .fold(zero, |mut acc, t| {
            let mut stream = rng::stream(seed, &[rng::tag::TRIAL, t as u64]);
            model.run_trial(&mut stream, |r, c| {
                if !c.is_empty() {
                    let mean = c.iter().map(|&x| pool[x].value).sum::<f64>() / c.len() as f64;
                    acc[r].0 += mean;
                    acc[r].1 += mean * mean;
                    acc[r].2 += 1;
                }
            });
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 += y.1;
                x.2 += y.2;
            }
            a
        });
    let per_round = sums
        .into_iter()
        .map(|(s, sq, n)| {
            if n == 0 {
                return MeanEstimate {
                    mean: f64::NAN,
                    se: f64::NAN,
                    n,
                };
            }
            let nf = n as f64;
            let mean = s / nf;
            let var = if n > 1 { ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
            MeanEstimate {
                mean,
                se: (var / nf).sqrt(),
                n,
            }
        })
        .collect();
    Ok(ValueReport { per_round })
}

// ---------------------------------------------------------------------------
// Verification table shared by the CLI and the acceptance suite.
// ---------------------------------------------------------------------------

/// One row of the verification table.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Reference value (bound or expected constant).
    pub bound: f64,
    pub empirical: f64,
    pub se: f64,
    pub pass: bool,
}

/// Fillers always survive a round unless never subsampled; the marked
/// instance (id 0) follows `marked_probs[m]` for strategy `m`.
pub fn marked_model(marked_probs: &[f64], pool_size: usize, alpha: f64, j: usize, rounds: usize) -> SurvivalModel {
    SurvivalModel {
        pool_size,
        strategies: marked_probs
            .iter()
            .map(|&p| SyntheticStrategy::new(move |x, _| if x == 0 { p } else { 1.0 }))
            .collect(),
        alpha,
        batches_per_strategy: j,
        rounds,
        batch_floor: 1,
    }
}

pub const SIM_POOL: usize = 250;

/// Closed-form numerics plus the three Monte Carlo checks, at `trials`
/// trials each and a 3-standard-error tolerance.
pub fn verify_all(trials: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let k = 3.0;

    let t1 = thm1_bound(0.4, 10, 0.9)?;
    out.push(Check {
        name: "value-preservation bound (0.4, 10, 0.9) ~ 0.9885".into(),
        bound: 0.9885,
        empirical: t1,
        se: 0.0,
        pass: (t1 - 0.9885).abs() <= 1e-4,
    });
    let per_round = thm2_bound(0.4, 0.05, 3, 10, 1)?;
    out.push(Check {
        name: "uninformative per-round bound (0.4, 0.05, 3, 10) ~ 0.4545".into(),
        bound: 0.4545,
        empirical: per_round,
        se: 0.0,
        pass: (per_round - 0.4545).abs() <= 1e-4,
    });
    let t2 = thm2_bound(0.4, 0.05, 3, 10, 5)?;
    out.push(Check {
        name: "uninformative 5-round bound (0.4, 0.05, 3, 10, 5) ~ 0.0194".into(),
        bound: 0.0194,
        empirical: t2,
        se: 0.0,
        pass: (t2 - 0.0194).abs() <= 2e-4,
    });

    for (label, probs) in [("M=1", vec![0.9]), ("M=3", vec![0.9, 0.2, 0.2])] {
        let model = marked_model(&probs, SIM_POOL, 0.4, 10, 5);
        let rep = simulate_survival(&model, &[0], trials, rng::derive_seed(seed, &[1, probs.len() as u64]))?;
        for (r, est) in rep.instances[0].per_round.iter().enumerate() {
            out.push(Check {
                name: format!("value preservation {label} round {} (>= bound - 3SE)", r + 1),
                bound: t1,
                empirical: est.freq,
                se: est.se,
                pass: est.trials > 0 && est.freq >= t1 - k * est.se,
            });
        }
    }

    let model = marked_model(&[0.05; 3], SIM_POOL, 0.4, 10, 5);
    let rep = simulate_survival(&model, &[0], trials, rng::derive_seed(seed, &[2]))?;
    for (r, est) in rep.instances[0].cumulative.iter().enumerate() {
        let bound = thm2_bound(0.4, 0.05, 3, 10, r + 1)?;
        out.push(Check {
            name: format!("uninformative survival after round {} (<= bound + 3SE)", r + 1),
            bound,
            empirical: est.freq,
            se: est.se,
            pass: est.freq <= bound + k * est.se,
        });
    }

    // Two-valued pool, p = 0.9 for V = 1 and 0.1 for V = 0.
    let (pool, model) = two_valued_pool(200, 0.4, 10, 5);
    let rep = check_value_monotonicity(&pool, &model, trials, rng::derive_seed(seed, &[3]))?;
    push_value_checks(&mut out, "two-valued", &rep, k, true);

    // Graded values with sigmoid-shaped selection from two strategies.
    let (pool, model) = sigmoid_pool(200, 0.4, 10, 5);
    let rep = check_value_monotonicity(&pool, &model, trials, rng::derive_seed(seed, &[4]))?;
    push_value_checks(&mut out, "sigmoid", &rep, k, false);

    Ok(out)
}

fn push_value_checks(out: &mut Vec<Check>, label: &str, rep: &ValueReport, k: f64, strict_first: bool) {
    for r in 1..rep.per_round.len() {
        let (a, b) = (rep.per_round[r - 1], rep.per_round[r]);
        let se = (a.se.powi(2) + b.se.powi(2)).sqrt();
        out.push(Check {
            name: format!("{label} pool mean value round {} -> {r} (non-decreasing within 3SE)", r - 1),
            bound: a.mean,
            empirical: b.mean,
            se,
            pass: b.mean >= a.mean - k * se,
        });
    }
    if strict_first {
        let (a, b) = (rep.per_round[0], rep.per_round[1]);
        let se = (a.se.powi(2) + b.se.powi(2)).sqrt();
        out.push(Check {
            name: format!("{label} pool mean value strictly increases 0 -> 1 (by > 3SE)"),
            bound: a.mean,
            empirical: b.mean,
            se,
            pass: rep.strictly_increases(0, k),
        });
    }
}

/// Half the instances valued 1 (selected w.p. 0.9), half valued 0 (0.1).
pub fn two_valued_pool(n: usize, alpha: f64, j: usize, rounds: usize) -> (Vec<ValuedInstance>, SurvivalModel) {
    let pool: Vec<ValuedInstance> = (0..n)
        .map(|id| ValuedInstance {
            id,
            value: if id % 2 == 0 { 1.0 } else { 0.0 },
        })
        .collect();
    let values: Arc<[f64]> = pool.iter().map(|v| v.value).collect();
    let model = SurvivalModel {
        pool_size: n,
        strategies: vec![SyntheticStrategy::from_values(values, |v| if v >= 1.0 { 0.9 } else { 0.1 })],
        alpha,
        batches_per_strategy: j,
        rounds,
        batch_floor: 1,
    };
    (pool, model)
}

/// Values evenly spaced in [0, 1]; two strategies with logistic selection
/// curves of different steepness and offset.
pub fn sigmoid_pool(n: usize, alpha: f64, j: usize, rounds: usize) -> (Vec<ValuedInstance>, SurvivalModel) {
    let pool: Vec<ValuedInstance> = (0..n)
        .map(|id| ValuedInstance {
            id,
            value: id as f64 / (n - 1).max(1) as f64,
        })
        .collect();
    let values: Arc<[f64]> = pool.iter().map(|v| v.value).collect();
    let logistic = |scale: f64, mid: f64| move |v: f64| 1.0 / (1.0 + (-scale * (v - mid)).exp());
    let model = SurvivalModel {
        pool_size: n,
        strategies: vec![
            SyntheticStrategy::from_values(values.clone(), logistic(8.0, 0.6)),
            SyntheticStrategy::from_values(values, logistic(3.0, 0.8)),
        ],
        alpha,
        batches_per_strategy: j,
        rounds,
        batch_floor: 1,
    };
    (pool, model)
}
