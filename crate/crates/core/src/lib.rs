//! Budget-constrained active learning for rubric scoring.
//!
//! Items are pre-computed feature vectors with hidden class labels. A
//! batch-mode loop repeatedly trains a softmax classifier on the labels
//! revealed so far, measures agreement on a held-out pool, and picks the
//! next batch with one of four rules: random, uncertainty, farthest-first
//! ("topological") or an uncertainty-filtered farthest-first hybrid.

pub mod classifier;
pub mod cli;
pub mod compare;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod pool;
pub mod strategies;

pub use error::{Error, Result};
