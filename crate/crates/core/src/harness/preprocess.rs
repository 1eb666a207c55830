//! Progressive filtering as a standalone preprocessing step: shrink an
//! unlabeled pool once, for use by any downstream selector.

use std::path::Path;

use super::config::{load_pool, RunConfig};
use crate::data::{load_indices, save_indices, write_atomic, PoolState};
use crate::error::{usage, Error, Result};
use crate::filtering::{progressive_filter, CandidatePool, FilterTrace};
use crate::model::TrainConfig;
use crate::rng::{self, tag};
use crate::strategies::StrategyContext;

#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub refined: CandidatePool,
    pub trace: FilterTrace,
}

impl FilterOutput {
    /// Write `refined_pool.csv` and `filter_trace.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_indices(dir.join("refined_pool.csv"), &self.refined.indices)?;
        write_atomic(&dir.join("filter_trace.json"), self.trace.to_json().as_bytes())
    }
}

/// Train on `labeled`, then filter every other instance of the configured
/// dataset. `labeled` defaults to the config's `dataset.labeled` file.
pub fn filter_pool(cfg: &RunConfig, labeled: Option<&[usize]>) -> Result<FilterOutput> {
    let loaded;
    let labeled = match labeled {
        Some(l) => l,
        None => {
            let p = cfg
                .dataset
                .labeled
                .as_ref()
                .ok_or_else(|| usage!("a labeled index file is required (dataset.labeled)"))?;
            loaded = load_indices(p)?;
            &loaded
        }
    };
    let (m, labels) = load_pool(&cfg.dataset)?;
    let universe: Vec<usize> = (0..m.n_instances()).collect();
    if labeled.is_empty() {
        return Err(usage!("the labeled set is empty"));
    }
    let pool = PoolState::new(&universe, labeled)?;
    let seed = cfg.al.seed;
    let train_cfg = TrainConfig {
        seed: rng::derive_seed(seed, &[tag::TRAIN, 0]),
        ..cfg.model.clone()
    };
    let ctx = StrategyContext::train(&m, &labels, &pool, &train_cfg)?;
    let (refined, trace) = progressive_filter(
        &pool.unlabeled(),
        &cfg.ensemble.specs(),
        &cfg.filter_config(),
        &ctx,
        rng::derive_seed(seed, &[tag::FILTER]),
        0,
    )?;
    Ok(FilterOutput { refined, trace })
}
