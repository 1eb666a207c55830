//! Pool-based AL benchmark loop: configuration, trial runner, metrics and
//! reports.

pub mod config;
pub mod metrics;
pub mod preprocess;
pub mod report;
pub mod trial;

pub use config::{load_pool, Dataset, Method, MethodKind, RunConfig};
pub use metrics::{aulc, relative_curve, win_matrix, WinMatrix};
pub use preprocess::{filter_pool, FilterOutput};
pub use report::report;
pub use trial::{run_experiment, run_trial, run_trial_observed, CycleRecord, TrialResult};
