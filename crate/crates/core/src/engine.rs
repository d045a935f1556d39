//! The deadline-aware load shedder and the two comparison baselines.
//!
//! A batch is split at `u_capacity` into a normal queue and a drop queue.
//! The normal queue is always fully scored. Drop-queue items are scored from
//! the cache first, then evaluated one at a time while the batch is still
//! inside its deadline, and whatever is left when the deadline passes gets
//! the average of the scores already assigned in the batch. Under very heavy
//! load the deadline is first extended (see [`extend_deadline`]).

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluators::{EvalError, TrustEvaluator};
use crate::load_monitor::{classify_load, extend_deadline, MonitorError};
use crate::model::{
    BatchReport, Clock, Duration, Instant, LoadClass, LoadParameters, ModelError, Provenance,
    ProvenanceCounts, ScoredItem, TrustScore, Url, WorkItem,
};
use crate::trust_cache::TrustCache;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Params(#[from] ModelError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("shed_fraction {0} outside [0, 1]")]
    ShedFraction(f64),
}

/// Arrival-ordered split of a batch at the capacity boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct QueuePair {
    pub normal_queue: Vec<WorkItem>,
    pub drop_queue: Vec<WorkItem>,
}

pub fn partition(items: Vec<WorkItem>, u_capacity: usize) -> QueuePair {
    let mut normal_queue = items;
    let split = normal_queue.len().min(u_capacity);
    let drop_queue = normal_queue.split_off(split);
    QueuePair {
        normal_queue,
        drop_queue,
    }
}

/// Mean of `assigned`, or `default_trust` when nothing has been assigned.
pub fn average_trust(assigned: &[TrustScore], default_trust: TrustScore) -> TrustScore {
    if assigned.is_empty() {
        return default_trust;
    }
    let sum: f64 = assigned.iter().map(|s| s.value()).sum();
    TrustScore::saturating(sum / assigned.len() as f64)
}

/// Which engine to run a batch through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    /// Deadline-aware shedding with cache and average fallback.
    Proposed,
    /// Evaluates everything, ignoring deadlines.
    Full,
    /// Evaluates up to `u_capacity + u_threshold` and drops the rest.
    RandomShed,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Proposed => "proposed",
            EngineKind::Full => "full",
            EngineKind::RandomShed => "random_shed",
        }
    }
}

/// Settings of the random-drop baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomShed {
    pub seed: u64,
    /// Share of the items beyond `u_capacity + u_threshold` that get dropped.
    pub shed_fraction: f64,
}

impl Default for RandomShed {
    fn default() -> Self {
        RandomShed {
            seed: 0,
            shed_fraction: 1.0,
        }
    }
}

/// One engine run's collaborators. Cheap to construct per batch.
pub struct Shedder<'a> {
    params: &'a LoadParameters,
    cache: &'a TrustCache,
    evaluator: &'a dyn TrustEvaluator,
    clock: &'a dyn Clock,
}

impl<'a> Shedder<'a> {
    pub fn new(
        params: &'a LoadParameters,
        cache: &'a TrustCache,
        evaluator: &'a dyn TrustEvaluator,
        clock: &'a dyn Clock,
    ) -> Self {
        Shedder {
            params,
            cache,
            evaluator,
            clock,
        }
    }

    pub fn run(
        &self,
        kind: EngineKind,
        urls: &[Url],
        random_shed: RandomShed,
    ) -> Result<BatchReport, EngineError> {
        match kind {
            EngineKind::Proposed => self.process_batch(urls),
            EngineKind::Full => self.process_batch_full(urls),
            EngineKind::RandomShed => self.process_batch_random_shed(urls, random_shed),
        }
    }

    /// Scores one batch with the deadline-aware shedder. Every input URL
    /// comes back exactly once, none dropped.
    pub fn process_batch(&self, urls: &[Url]) -> Result<BatchReport, EngineError> {
        self.params.validate()?;
        let start = self.clock.now();
        let items = WorkItem::batch(urls);
        let class = classify_load(items.len(), self.params);
        let (scored, effective_deadline) = match class {
            LoadClass::Normal => (self.run_normal(&items)?, self.params.deadline_normal),
            LoadClass::Heavy => {
                let deadline = self.params.deadline_overload;
                let queues = partition(items, self.params.u_capacity);
                (self.run_heavy(queues, start, deadline)?, deadline)
            }
            LoadClass::VeryHeavy => self.run_very_heavy(items, start)?,
        };
        Ok(self.report(scored, class, effective_deadline, start))
    }

    /// Scores every item: cache hits for free, the rest evaluated and written back.
    pub fn run_normal(&self, queue: &[WorkItem]) -> Result<Vec<ScoredItem>, EngineError> {
        queue.iter().map(|item| self.score_item(item)).collect()
    }

    /// Heavy-load procedure against a deadline measured from `start`.
    pub fn run_heavy(
        &self,
        queues: QueuePair,
        start: Instant,
        effective_deadline: Duration,
    ) -> Result<Vec<ScoredItem>, EngineError> {
        let mut scored = self.run_normal(&queues.normal_queue)?;

        // Cache pass over the drop queue. Free, so it runs even when the
        // normal queue already used up the deadline.
        let mut remaining = Vec::with_capacity(queues.drop_queue.len());
        for item in queues.drop_queue {
            match self.cache.lookup(&item.url) {
                Some(score) => scored.push(self.assigned(item, score, Provenance::CacheHit)),
                None => remaining.push(item),
            }
        }

        // Deadline is checked before each evaluation starts.
        let mut remaining = remaining.into_iter();
        let mut leftover = Vec::new();
        while let Some(item) = remaining.next() {
            if self.clock.now().since(start) < effective_deadline {
                scored.push(self.score_item(&item)?);
            } else {
                leftover.push(item);
                leftover.extend(remaining.by_ref());
            }
        }

        scored.sort_by_key(|s| s.arrival_index);
        if !leftover.is_empty() {
            // Summed in arrival order.
            let assigned: Vec<TrustScore> = scored.iter().map(|s| s.score).collect();
            let average = average_trust(&assigned, self.params.default_trust);
            scored.extend(
                leftover
                    .into_iter()
                    .map(|item| self.assigned(item, average, Provenance::Averaged)),
            );
            scored.sort_by_key(|s| s.arrival_index);
        }
        Ok(scored)
    }

    /// Extends the deadline for the batch size, then runs the heavy procedure.
    /// Returns the scored items and the deadline that was enforced.
    pub fn run_very_heavy(
        &self,
        items: Vec<WorkItem>,
        start: Instant,
    ) -> Result<(Vec<ScoredItem>, Duration), EngineError> {
        let deadline = extend_deadline(items.len(), self.params)?;
        let queues = partition(items, self.params.u_capacity);
        Ok((self.run_heavy(queues, start, deadline)?, deadline))
    }

    /// Baseline without shedding: everything is scored, deadlines ignored.
    pub fn process_batch_full(&self, urls: &[Url]) -> Result<BatchReport, EngineError> {
        let start = self.clock.now();
        let items = WorkItem::batch(urls);
        let class = classify_load(items.len(), self.params);
        let scored = self.run_normal(&items)?;
        Ok(self.report(scored, class, self.nominal_deadline(class), start))
    }

    /// Baseline that sheds: the first `u_capacity + u_threshold` items are
    /// scored, and a seeded random `shed_fraction` of the rest is dropped
    /// with `default_trust`. The others past the limit are scored normally.
    pub fn process_batch_random_shed(
        &self,
        urls: &[Url],
        shed: RandomShed,
    ) -> Result<BatchReport, EngineError> {
        self.params.validate()?;
        if !(0.0..=1.0).contains(&shed.shed_fraction) {
            return Err(EngineError::ShedFraction(shed.shed_fraction));
        }
        let start = self.clock.now();
        let items = WorkItem::batch(urls);
        let class = classify_load(items.len(), self.params);
        let QueuePair {
            normal_queue: admitted,
            drop_queue: excess,
        } = partition(items, self.params.overload_limit());

        let mut scored = self.run_normal(&admitted)?;
        let n_drop = (shed.shed_fraction * excess.len() as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(shed.seed);
        let mut dropped = vec![false; excess.len()];
        for i in index::sample(&mut rng, excess.len(), n_drop.min(excess.len())) {
            dropped[i] = true;
        }
        for (item, drop) in excess.into_iter().zip(dropped) {
            if drop {
                scored.push(self.assigned(item, self.params.default_trust, Provenance::Dropped));
            } else {
                scored.push(self.score_item(&item)?);
            }
        }
        Ok(self.report(scored, class, self.nominal_deadline(class), start))
    }

    fn nominal_deadline(&self, class: LoadClass) -> Duration {
        match class {
            LoadClass::Normal => self.params.deadline_normal,
            LoadClass::Heavy | LoadClass::VeryHeavy => self.params.deadline_overload,
        }
    }

    fn score_item(&self, item: &WorkItem) -> Result<ScoredItem, EngineError> {
        if let Some(score) = self.cache.lookup(&item.url) {
            return Ok(self.assigned(item.clone(), score, Provenance::CacheHit));
        }
        let score = self.evaluator.evaluate(&item.url, self.clock)?;
        let at = self.clock.now();
        self.cache.insert(item.url.clone(), score, at);
        Ok(ScoredItem {
            url: item.url.clone(),
            arrival_index: item.arrival_index,
            score,
            provenance: Provenance::Evaluated,
            scored_at: at,
        })
    }

    fn assigned(&self, item: WorkItem, score: TrustScore, provenance: Provenance) -> ScoredItem {
        ScoredItem {
            url: item.url,
            arrival_index: item.arrival_index,
            score,
            provenance,
            scored_at: self.clock.now(),
        }
    }

    fn report(
        &self,
        items: Vec<ScoredItem>,
        load_class: LoadClass,
        effective_deadline: Duration,
        start: Instant,
    ) -> BatchReport {
        BatchReport {
            uload: items.len(),
            counts: ProvenanceCounts::tally(&items),
            items,
            load_class,
            effective_deadline,
            elapsed: self.clock.now().since(start),
        }
    }
}
