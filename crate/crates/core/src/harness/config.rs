//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [dataset]
//! embeddings = "train.refb"     # or [dataset.synthetic]
//! labels = "train_labels.csv"
//! n_classes = 10
//!
//! [al]
//! b = 10
//! cycles = 20
//! seed = 0
//! method = "refine"             # "single" | "filtered" take `strategy`
//!
//! [filter]
//! rounds = 5
//! alpha = 0.4
//! batches_per_strategy = 10
//!
//! [ensemble]
//! members = ["margin", "typiclust", "badge"]
//! params.alfamix = { eps_mix = 0.2 }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::CoverageConfig;
use crate::data::{
    load_embeddings, load_labels, normalize_features, stratified_split, synth_gaussian, EmbeddingMatrix,
    LabelVector, SyntheticSpec,
};
use crate::error::{usage, Error, Result};
use crate::filtering::FilterConfig;
use crate::model::TrainConfig;
use crate::rng;
use crate::strategies::{StrategyKind, StrategySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub embeddings: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub n_classes: Option<usize>,
    pub test_embeddings: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    /// Index file of already-labeled instances (filter mode).
    pub labeled: Option<PathBuf>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_true() -> bool {
    true
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            embeddings: None,
            labels: None,
            n_classes: None,
            test_embeddings: None,
            test_labels: None,
            synthetic: None,
            labeled: None,
            test_fraction: default_test_fraction(),
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    #[default]
    Refine,
    Single,
    Filtered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlConfig {
    pub b: usize,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default)]
    pub seed: u64,
    /// Consecutive seeds `seed, seed + 1, ...` run by `refine run`.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub method: MethodKind,
    pub strategy: Option<StrategyKind>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

fn default_cycles() -> usize {
    20
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_members")]
    pub members: Vec<StrategyKind>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<StrategyKind, BTreeMap<String, f64>>,
}

fn default_members() -> Vec<StrategyKind> {
    StrategyKind::ENSEMBLE.to_vec()
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            members: default_members(),
            params: BTreeMap::new(),
        }
    }
}

impl EnsembleConfig {
    pub fn specs(&self) -> Vec<StrategySpec> {
        self.members
            .iter()
            .map(|&kind| StrategySpec {
                kind,
                params: self.params.get(&kind).cloned().unwrap_or_default(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// How each cycle's batch is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Progressive filtering, then coverage selection on the refined pool.
    Refine,
    /// One strategy on the full unlabeled pool.
    Single(StrategySpec),
    /// Progressive filtering, then one strategy on the refined pool.
    Filtered(StrategySpec),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Refine => f.write_str("refine"),
            Method::Single(s) => f.write_str(s.kind.name()),
            Method::Filtered(s) => write!(f, "{}+filter", s.kind.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: TrainConfig,
    pub al: AlConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub coverage: CoverageConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| usage!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a config file; relative dataset paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let d = &mut cfg.dataset;
        for p in [
            &mut d.embeddings,
            &mut d.labels,
            &mut d.test_embeddings,
            &mut d.test_labels,
            &mut d.labeled,
            &mut cfg.output.dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.al.b == 0 {
            return Err(usage!("al.b must be at least 1"));
        }
        if self.al.cycles == 0 {
            return Err(usage!("al.cycles must be at least 1"));
        }
        if self.al.trials == 0 {
            return Err(usage!("al.trials must be at least 1"));
        }
        self.model.validate()?;
        self.filter_config().validate()?;
        if self.ensemble.members.is_empty() {
            return Err(usage!("ensemble.members is empty"));
        }
        for s in self.ensemble.specs() {
            s.validate()?;
        }
        self.method()?;
        let d = &self.dataset;
        match (&d.synthetic, &d.embeddings) {
            (Some(_), Some(_)) => return Err(usage!("dataset: give either synthetic or embeddings, not both")),
            (None, None) => return Err(usage!("dataset: embeddings or synthetic is required")),
            (Some(s), None) => s.validate()?,
            (None, Some(_)) => {
                if d.labels.is_none() || d.n_classes.is_none() {
                    return Err(usage!("dataset: labels and n_classes are required with embeddings"));
                }
            }
        }
        if d.test_embeddings.is_some() != d.test_labels.is_some() {
            return Err(usage!("dataset: test_embeddings and test_labels go together"));
        }
        Ok(())
    }

    pub fn method(&self) -> Result<Method> {
        let spec = || -> Result<StrategySpec> {
            let kind = self
                .al
                .strategy
                .ok_or_else(|| usage!("al.strategy is required for method {:?}", self.al.method))?;
            let spec = StrategySpec {
                kind,
                params: self.al.params.clone(),
            };
            spec.validate()?;
            Ok(spec)
        };
        Ok(match self.al.method {
            MethodKind::Refine => Method::Refine,
            MethodKind::Single => Method::Single(spec()?),
            MethodKind::Filtered => Method::Filtered(spec()?),
        })
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            batch_size: self.al.b,
            ..self.filter.clone()
        }
    }

    /// SHA-256 over the canonical JSON of the config minus seed and output.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.al.seed = 0;
        c.al.trials = 1;
        c.output = OutputConfig::default();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.al.seed = seed;
        c
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.al.trials as u64).map(|t| self.al.seed + t).collect()
    }
}

fn load_primary(cfg: &DatasetConfig) -> Result<(EmbeddingMatrix, LabelVector)> {
    match (&cfg.synthetic, &cfg.embeddings, &cfg.labels) {
        (Some(spec), _, _) => synth_gaussian(spec),
        (None, Some(e), Some(lp)) => {
            let k = cfg.n_classes.ok_or_else(|| usage!("dataset.n_classes is required"))?;
            let m = load_embeddings(e)?;
            let l = load_labels(lp, k)?;
            l.check_pairs_with(&m)?;
            Ok((m, l))
        }
        _ => Err(usage!("dataset: embeddings and labels, or synthetic, are required")),
    }
}

/// The primary features and labels with no holdout, normalized if configured.
pub fn load_pool(cfg: &DatasetConfig) -> Result<(EmbeddingMatrix, LabelVector)> {
    let (m, l) = load_primary(cfg)?;
    let m = if cfg.normalize { normalize_features(&m)? } else { m };
    Ok((m, l))
}

/// Features for every instance plus the train (pool) / test partition.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub embeddings: EmbeddingMatrix,
    pub labels: LabelVector,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    /// Load or generate the data. Without a shipped test split, a stratified
    /// `test_fraction` holdout is drawn from `split_seed`.
    pub fn prepare(cfg: &DatasetConfig, split_seed: u64) -> Result<Self> {
        let (m, l) = load_primary(cfg)?;
        let (m, l, train, test) = match (&cfg.test_embeddings, &cfg.test_labels) {
            (Some(te), Some(tl)) => {
                let tm = load_embeddings(te)?;
                let tlab = load_labels(tl, l.n_classes())?;
                tlab.check_pairs_with(&tm)?;
                if tm.n_dims() != m.n_dims() {
                    return Err(crate::error::data_err!(
                        "test features have {} dims, train features {}",
                        tm.n_dims(),
                        m.n_dims()
                    ));
                }
                let n = m.n_instances();
                let mut values = m.values().to_vec();
                values.extend_from_slice(tm.values());
                let mut labels = l.labels().to_vec();
                labels.extend_from_slice(tlab.labels());
                let all = EmbeddingMatrix::new(n + tm.n_instances(), m.n_dims(), values)?;
                let all_l = LabelVector::new(labels, l.n_classes())?;
                (all, all_l, (0..n).collect(), (n..n + tm.n_instances()).collect())
            }
            _ => {
                let (train, test) = stratified_split(&l, cfg.test_fraction, split_seed)?;
                (m, l, train, test)
            }
        };
        let embeddings = if cfg.normalize { normalize_features(&m)? } else { m };
        Ok(Self {
            embeddings,
            labels: l,
            train,
            test,
        })
    }

    /// Data for a trial of `cfg`; the holdout depends on the trial seed.
    pub fn for_run(cfg: &RunConfig) -> Result<Self> {
        Self::prepare(&cfg.dataset, rng::derive_seed(cfg.al.seed, &[rng::tag::SPLIT]))
    }
}
