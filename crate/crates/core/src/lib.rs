//! Ensemble active learning over frozen feature embeddings.
//!
//! The crate implements a two-stage batch selector. Progressive filtering
//! ([`filtering`]) lets an ensemble of query strategies ([`strategies`]) vote
//! on random subsamples of the unlabeled pool over several rounds, keeping
//! only instances some strategy picked. Coverage-based selection
//! ([`coverage`]) then chooses the final batch from the refined pool by
//! greedy, uncertainty-weighted kernel coverage.
//!
//! Around that core sit a linear softmax head ([`model`]), dataset I/O and a
//! synthetic generator ([`data`]), Monte Carlo checks of the filter's
//! survival bounds ([`theory`]) and a reproducible pool-based AL benchmark
//! loop with reporting ([`harness`]).

pub mod coverage;
pub mod data;
pub mod error;
pub mod filtering;
pub mod harness;
pub mod kmeans;
pub mod model;
pub mod rng;
pub mod strategies;
pub mod theory;

pub use error::{Error, Result};
