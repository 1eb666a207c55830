//! One AL trial: seed `L_0`, then alternate train, evaluate, select, acquire.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::config::{Dataset, Method, RunConfig};
use super::metrics::aulc;
use crate::coverage::refine_select;
use crate::data::{write_atomic, PoolState};
use crate::error::{usage, Error, Result};
use crate::filtering::{progressive_filter, FilterTrace};
use crate::model::{evaluate, TrainConfig};
use crate::rng::{self, tag};
use crate::strategies::{Batch, Strategy, StrategyContext};

/// Persisted outcome of one trial. Wall times are kept out of the JSON so
/// that reruns produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialResult {
    pub method: String,
    pub config_digest: String,
    pub seed: u64,
    /// Test accuracy after cycles `0..=A`.
    pub accuracies: Vec<f64>,
    pub aulc: f64,
    #[serde(skip)]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub train_secs: Vec<f64>,
    pub select_secs: Vec<f64>,
}

impl TrialResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    /// `<method>_seed<seed>.json`, with `+` spelled out for file systems.
    pub fn file_name(&self) -> String {
        format!("{}_seed{}.json", self.method.replace('+', "_on_"), self.seed)
    }

    /// Write the result JSON into `dir`, plus wall times under `dir/timings/`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(self.file_name());
        write_atomic(&path, self.to_json().as_bytes())?;
        if let Some(t) = &self.timings {
            let tdir = dir.join("timings");
            std::fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
            let json = serde_json::to_string_pretty(t).expect("timings serialize");
            write_atomic(&tdir.join(self.file_name()), json.as_bytes())?;
        }
        Ok(path)
    }
}

/// What one cycle saw and did, for inspection by callers.
#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub cycle: usize,
    pub accuracy: f64,
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    /// Refined pool, for methods that filter.
    pub refined: Option<Vec<usize>>,
    pub filter_trace: Option<FilterTrace>,
    pub batch: Vec<usize>,
}

/// Run one trial of `cfg` with seed `cfg.al.seed`.
pub fn run_trial(cfg: &RunConfig, data: &Dataset) -> Result<TrialResult> {
    run_trial_observed(cfg, data, |_| {})
}

/// [`run_trial`], calling `observe` after every selection.
pub fn run_trial_observed(
    cfg: &RunConfig,
    data: &Dataset,
    mut observe: impl FnMut(&CycleRecord),
) -> Result<TrialResult> {
    cfg.validate()?;
    let method = cfg.method()?;
    let seed = cfg.al.seed;
    let b = cfg.al.b;
    let cycles = cfg.al.cycles;
    let need = b * (cycles + 1);
    if need > data.train.len() {
        return Err(usage!(
            "budget b * (cycles + 1) = {need} exceeds the {} training instances",
            data.train.len()
        ));
    }

    let mut init_rng = rng::stream(seed, &[tag::INIT_POOL]);
    let initial: Vec<usize> = sample(&mut init_rng, data.train.len(), b)
        .into_iter()
        .map(|p| data.train[p])
        .collect();
    let mut pool = PoolState::new(&data.train, &initial)?;
    let test_labels: Vec<u32> = data.test.iter().map(|&i| data.labels.get(i)).collect();
    let ensemble = cfg.ensemble.specs();
    let filter_cfg = cfg.filter_config();
    let filter_seed = rng::derive_seed(seed, &[tag::FILTER]);

    let mut accuracies = Vec::with_capacity(cycles + 1);
    let mut timings = Timings::default();
    for t in 0..=cycles {
        let started = Instant::now();
        let train_cfg = TrainConfig {
            seed: rng::derive_seed(seed, &[tag::TRAIN, t as u64]),
            ..cfg.model.clone()
        };
        let ctx = StrategyContext::train(&data.embeddings, &data.labels, &pool, &train_cfg).map_err(stage(t, "train"))?;
        let acc = evaluate(&ctx.head, &data.embeddings, &data.test, &test_labels).map_err(stage(t, "evaluate"))?;
        accuracies.push(acc);
        timings.train_secs.push(started.elapsed().as_secs_f64());
        if t == cycles {
            break;
        }

        let started = Instant::now();
        let unlabeled = pool.unlabeled();
        let mut select_rng = rng::stream(seed, &[tag::SELECT, t as u64]);
        let (batch, refined, trace): (Batch, _, _) = match &method {
            Method::Single(s) => (
                s.select(&ctx, &unlabeled, b, &mut select_rng).map_err(stage(t, "select"))?,
                None,
                None,
            ),
            Method::Filtered(s) => {
                let (c, tr) = progressive_filter(&unlabeled, &ensemble, &filter_cfg, &ctx, filter_seed, t)
                    .map_err(stage(t, "filter"))?;
                let batch = s.select(&ctx, &c.indices, b, &mut select_rng).map_err(stage(t, "select"))?;
                (batch, Some(c.indices), Some(tr))
            }
            Method::Refine => {
                let (c, tr) = progressive_filter(&unlabeled, &ensemble, &filter_cfg, &ctx, filter_seed, t)
                    .map_err(stage(t, "filter"))?;
                let batch = refine_select(&ctx, &c.indices, b, &cfg.coverage).map_err(stage(t, "select"))?;
                (batch, Some(c.indices), Some(tr))
            }
        };
        timings.select_secs.push(started.elapsed().as_secs_f64());
        observe(&CycleRecord {
            cycle: t,
            accuracy: acc,
            labeled: pool.labeled(),
            unlabeled,
            refined,
            filter_trace: trace,
            batch: batch.indices().to_vec(),
        });
        pool.acquire(batch.indices()).map_err(stage(t, "select"))?;
    }

    Ok(TrialResult {
        method: method.to_string(),
        config_digest: cfg.digest(),
        seed,
        aulc: aulc(&accuracies),
        accuracies,
        timings: Some(timings),
    })
}

fn stage(cycle: usize, stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Cycle {
        cycle,
        stage,
        source: Box::new(e),
    }
}

/// Run every seed of `cfg` and save each result under the output directory.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<TrialResult>> {
    let dir = cfg
        .output
        .dir
        .clone()
        .ok_or_else(|| usage!("output.dir is required"))?;
    let mut out = Vec::new();
    for seed in cfg.seeds() {
        let c = cfg.with_seed(seed);
        let data = Dataset::for_run(&c)?;
        let r = run_trial(&c, &data)?;
        r.save(&dir)?;
        out.push(r);
    }
    Ok(out)
}
