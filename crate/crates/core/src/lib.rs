//! Deadline-aware load shedding for trust scoring of retrieved URL batches.
//!
//! An overloaded batch is split at a capacity boundary; the overflow is
//! served from a persistent trust cache, evaluated while time remains, and
//! assigned the batch's average score once the deadline passes. Every URL
//! receives a score. Two baselines (evaluate-everything and random drop) and
//! a benchmark harness are included for comparison.

pub mod cli;
pub mod engine;
pub mod evaluators;
pub mod load_monitor;
pub mod model;
pub mod trust_cache;
pub mod workload;

pub use engine::{EngineKind, RandomShed, Shedder};
pub use evaluators::{Evaluator, EvaluatorSpec, TrustEvaluator};
pub use model::{
    BatchReport, Clock, Duration, Instant, LoadClass, LoadParameters, Provenance, TrustScore, Url,
    VirtualClock, WallClock,
};
pub use trust_cache::TrustCache;
