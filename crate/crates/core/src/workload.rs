//! Synthetic workloads, per-batch metrics and engine comparison tables.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, EngineKind, RandomShed, Shedder};
use crate::evaluators::{oracle_scores, TrustEvaluator};
use crate::model::{
    BatchReport, Clock, Duration, LoadClass, LoadParameters, ModelError, Provenance,
    ProvenanceCounts, TrustScore, Url, VirtualClock, WallClock, WorkItem,
};
use crate::trust_cache::TrustCache;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("invalid workload `{field}`: {reason}")]
    InvalidSpec {
        field: &'static str,
        reason: &'static str,
    },
    #[error("oracle has no score for {0}")]
    MissingOracle(Url),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub n_batches: usize,
    pub batch_size_choices: Vec<usize>,
    pub url_universe: usize,
    /// 0 draws uniformly; larger values favour low-index URLs.
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let invalid = |field, reason| Err(WorkloadError::InvalidSpec { field, reason });
        if self.n_batches < 1 {
            return invalid("n_batches", "must be at least 1");
        }
        if self.batch_size_choices.is_empty() {
            return invalid("batch_size_choices", "must not be empty");
        }
        if self.url_universe < 1 {
            return invalid("url_universe", "must be at least 1");
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return invalid("zipf_exponent", "must be a finite value >= 0");
        }
        Ok(())
    }
}

/// URL number `i` of the synthetic universe.
pub fn universe_url(i: usize) -> Url {
    Url::parse(&format!("http://site{i}.example/result")).expect("non-empty")
}

/// Generates `n_batches` result lists. Each list draws its size from
/// `batch_size_choices` and that many URLs with probability proportional to
/// `1 / (i + 1)^zipf_exponent`, keeping first occurrences only.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Vec<Vec<Url>>, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights = (0..spec.url_universe).map(|i| ((i + 1) as f64).powf(-spec.zipf_exponent));
    let dist = WeightedIndex::new(weights).map_err(|_| WorkloadError::InvalidSpec {
        field: "zipf_exponent",
        reason: "produces degenerate weights for this universe",
    })?;

    let batches = (0..spec.n_batches)
        .map(|_| {
            let size = *spec.batch_size_choices.choose(&mut rng).expect("non-empty");
            let mut seen = HashSet::with_capacity(size);
            (0..size)
                .map(|_| dist.sample(&mut rng))
                .filter(|&i| seen.insert(i))
                .map(universe_url)
                .collect()
        })
        .collect();
    Ok(batches)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub response_time: Duration,
    pub deadline_met: bool,
    pub coverage_evaluated: f64,
    pub coverage_cached: f64,
    pub coverage_averaged: f64,
    pub coverage_dropped: f64,
    /// Mean absolute error of assigned scores against the oracle.
    pub trust_mae: f64,
    pub trust_mean: f64,
}

/// Metrics of one report. A batch meets its deadline if it finished within
/// `effective_deadline + slack`, where `slack` covers one in-flight evaluation.
/// Empty batches have zero coverage and always meet the deadline.
pub fn compute_metrics(
    report: &BatchReport,
    oracle: &HashMap<Url, TrustScore>,
    effective_deadline: Duration,
    slack: Duration,
) -> Result<Metrics, WorkloadError> {
    let n = report.items.len();
    let mut abs_err = 0.0;
    let mut total = 0.0;
    for item in &report.items {
        let truth = oracle
            .get(&item.url)
            .ok_or_else(|| WorkloadError::MissingOracle(item.url.clone()))?;
        abs_err += (item.score.value() - truth.value()).abs();
        total += item.score.value();
    }
    let share = |p: Provenance| {
        if n == 0 {
            0.0
        } else {
            report.count(p) as f64 / n as f64
        }
    };
    let mean = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
    Ok(Metrics {
        response_time: report.elapsed,
        deadline_met: report.elapsed <= effective_deadline + slack,
        coverage_evaluated: share(Provenance::Evaluated),
        coverage_cached: share(Provenance::CacheHit),
        coverage_averaged: share(Provenance::Averaged),
        coverage_dropped: share(Provenance::Dropped),
        trust_mae: mean(abs_err),
        trust_mean: mean(total),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    #[default]
    Virtual,
    Wall,
}

#[derive(Debug, Default)]
pub struct CompareOptions<'a> {
    pub random_shed: RandomShed,
    /// All engines share one cache and run in order instead of each
    /// starting from its own copy.
    pub shared_cache: bool,
    /// Contents every engine's cache starts from.
    pub initial_cache: Option<&'a TrustCache>,
    pub clock: ClockMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub batch_id: usize,
    pub engine: EngineKind,
    pub uload: usize,
    pub load_class: LoadClass,
    pub effective_deadline: Duration,
    pub counts: ProvenanceCounts,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub engine: EngineKind,
    pub batches: usize,
    pub total_uload: usize,
    pub load_class: Option<LoadClass>,
    pub mean_effective_deadline_us: f64,
    pub mean_response_us: f64,
    pub min_response_us: u64,
    pub max_response_us: u64,
    pub deadlines_met: usize,
    pub counts: ProvenanceCounts,
    /// Item-weighted over all batches.
    pub trust_mae: f64,
    pub trust_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<MetricsRow>,
    pub aggregates: Vec<AggregateRow>,
    /// Mean full-engine response time over mean proposed response time.
    pub speedup: Option<f64>,
}

pub const CSV_HEADER: &str = "batch_id,engine,uload,load_class,effective_deadline_us,elapsed_us,\
deadline_met,n_evaluated,n_cached,n_averaged,n_dropped,trust_mae,trust_mean";

impl ComparisonTable {
    pub fn aggregate(&self, engine: EngineKind) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.engine == engine)
    }

    pub fn rows_for(&self, engine: EngineKind) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(move |r| r.engine == engine)
    }

    /// Per-batch rows grouped by engine, each group followed by its `ALL` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for agg in &self.aggregates {
            for r in self.rows_for(agg.engine) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
                    r.batch_id,
                    r.engine.name(),
                    r.uload,
                    r.load_class,
                    r.effective_deadline.as_micros(),
                    r.metrics.response_time.as_micros(),
                    r.metrics.deadline_met,
                    r.counts.evaluated,
                    r.counts.cache_hit,
                    r.counts.averaged,
                    r.counts.dropped,
                    r.metrics.trust_mae,
                    r.metrics.trust_mean,
                );
            }
            let _ = writeln!(
                out,
                "ALL,{},{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
                agg.engine.name(),
                agg.total_uload,
                agg.load_class
                    .map_or_else(|| "mixed".to_owned(), |c| c.to_string()),
                agg.mean_effective_deadline_us.floor() as u64,
                agg.mean_response_us.floor() as u64,
                agg.deadlines_met == agg.batches,
                agg.counts.evaluated,
                agg.counts.cache_hit,
                agg.counts.averaged,
                agg.counts.dropped,
                agg.trust_mae,
                agg.trust_mean,
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }
}

/// Runs every engine in `engines` over the same batches, each with a fresh
/// clock and (unless `shared_cache`) its own cache.
pub fn compare_engines(
    workload: &[Vec<Url>],
    params: &LoadParameters,
    evaluator: &dyn TrustEvaluator,
    engines: &[EngineKind],
    options: &CompareOptions<'_>,
) -> Result<ComparisonTable, WorkloadError> {
    params.validate().map_err(EngineError::from)?;
    let oracles = workload
        .iter()
        .map(|batch| oracle_scores(evaluator, &WorkItem::batch(batch)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(EngineError::from)?;
    let slack = evaluator.max_cost();
    let fresh_cache = || {
        options
            .initial_cache
            .map_or_else(TrustCache::new, TrustCache::snapshot)
    };
    let shared = fresh_cache();

    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for &engine in engines {
        let own;
        let cache = if options.shared_cache {
            &shared
        } else {
            own = fresh_cache();
            &own
        };
        let clock: Box<dyn Clock> = match options.clock {
            ClockMode::Virtual => Box::new(VirtualClock::new()),
            ClockMode::Wall => Box::new(WallClock::new()),
        };
        let shedder = Shedder::new(params, cache, evaluator, clock.as_ref());
        let start = rows.len();
        for (batch_id, (batch, oracle)) in workload.iter().zip(&oracles).enumerate() {
            let report = shedder.run(engine, batch, options.random_shed)?;
            let metrics = compute_metrics(&report, oracle, report.effective_deadline, slack)?;
            rows.push(MetricsRow {
                batch_id,
                engine,
                uload: report.uload,
                load_class: report.load_class,
                effective_deadline: report.effective_deadline,
                counts: report.counts,
                metrics,
            });
        }
        aggregates.push(aggregate(engine, &rows[start..]));
    }

    let mean_rt = |kind| {
        aggregates
            .iter()
            .find(|a: &&AggregateRow| a.engine == kind)
            .map(|a| a.mean_response_us)
    };
    let speedup = match (mean_rt(EngineKind::Full), mean_rt(EngineKind::Proposed)) {
        (Some(full), Some(proposed)) if proposed > 0.0 => Some(full / proposed),
        _ => None,
    };
    Ok(ComparisonTable {
        rows,
        aggregates,
        speedup,
    })
}

fn aggregate(engine: EngineKind, rows: &[MetricsRow]) -> AggregateRow {
    let batches = rows.len();
    let total_uload: usize = rows.iter().map(|r| r.uload).sum();
    let mean_of = |f: &dyn Fn(&MetricsRow) -> f64| {
        if batches == 0 {
            0.0
        } else {
            rows.iter().map(f).sum::<f64>() / batches as f64
        }
    };
    let weighted = |f: &dyn Fn(&Metrics) -> f64| {
        if total_uload == 0 {
            0.0
        } else {
            rows.iter()
                .map(|r| f(&r.metrics) * r.uload as f64)
                .sum::<f64>()
                / total_uload as f64
        }
    };
    let response = rows.iter().map(|r| r.metrics.response_time.as_micros());
    let load_class = match rows.first() {
        Some(first) if rows.iter().all(|r| r.load_class == first.load_class) => {
            Some(first.load_class)
        }
        _ => None,
    };
    let mut counts = ProvenanceCounts::default();
    for r in rows {
        counts.evaluated += r.counts.evaluated;
        counts.cache_hit += r.counts.cache_hit;
        counts.averaged += r.counts.averaged;
        counts.dropped += r.counts.dropped;
    }
    AggregateRow {
        engine,
        batches,
        total_uload,
        load_class,
        mean_effective_deadline_us: mean_of(&|r| r.effective_deadline.as_micros() as f64),
        mean_response_us: mean_of(&|r| r.metrics.response_time.as_micros() as f64),
        min_response_us: response.clone().min().unwrap_or(0),
        max_response_us: response.max().unwrap_or(0),
        deadlines_met: rows.iter().filter(|r| r.metrics.deadline_met).count(),
        counts,
        trust_mae: weighted(&|m| m.trust_mae),
        trust_mean: weighted(&|m| m.trust_mean),
    }
}

impl From<ModelError> for WorkloadError {
    fn from(e: ModelError) -> Self {
        WorkloadError::Engine(EngineError::Params(e))
    }
}
