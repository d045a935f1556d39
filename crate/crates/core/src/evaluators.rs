//! The trust evaluator interface and reference implementations.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Clock, Duration, TrustScore, Url, WorkItem, TRUST_MAX};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("scripted evaluator has no entry for {0}")]
    UnknownUrl(Url),
}

/// Computes a trust score for one URL at some cost.
pub trait TrustEvaluator {
    /// The score for `url`, without charging any time.
    fn score(&self, url: &Url) -> Result<TrustScore, EvalError>;

    /// Time one evaluation of `url` takes.
    fn cost(&self, url: &Url) -> Result<Duration, EvalError>;

    /// Upper bound on [`TrustEvaluator::cost`] over every URL this evaluator accepts.
    fn max_cost(&self) -> Duration;

    /// Scores `url` and charges its cost to `clock`.
    fn evaluate(&self, url: &Url, clock: &dyn Clock) -> Result<TrustScore, EvalError> {
        let cost = self.cost(url)?;
        let score = self.score(url)?;
        clock.spend(cost);
        Ok(score)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// Maps the FNV-1a hash of the normalized URL linearly onto the trust scale.
pub fn hash_score(url: &Url) -> TrustScore {
    let unit = fnv1a_64(url.as_str().as_bytes()) as f64 / 2f64.powi(64);
    TrustScore::saturating(TRUST_MAX * unit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub url: Url,
    pub score: TrustScore,
    pub cost_us: Duration,
}

/// Evaluator configuration as it appears in the harness config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorSpec {
    DeterministicHash {
        per_item_cost_us: Duration,
    },
    FixedCost {
        per_item_cost_us: Duration,
        score: TrustScore,
    },
    Scripted {
        script: Vec<ScriptEntry>,
    },
}

impl EvaluatorSpec {
    pub fn build(&self) -> Evaluator {
        match self {
            EvaluatorSpec::DeterministicHash { per_item_cost_us } => Evaluator::DeterministicHash {
                cost: *per_item_cost_us,
            },
            EvaluatorSpec::FixedCost {
                per_item_cost_us,
                score,
            } => Evaluator::FixedCost {
                cost: *per_item_cost_us,
                score: *score,
            },
            EvaluatorSpec::Scripted { script } => Evaluator::Scripted(
                script
                    .iter()
                    .map(|e| (e.url.clone(), (e.score, e.cost_us)))
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluator {
    /// Score from [`hash_score`], constant cost.
    DeterministicHash { cost: Duration },
    /// Same score for every URL, constant cost.
    FixedCost { cost: Duration, score: TrustScore },
    /// Per-URL score and cost; any other URL is an error.
    Scripted(HashMap<Url, (TrustScore, Duration)>),
}

impl Evaluator {
    pub fn hash(cost: Duration) -> Self {
        Evaluator::DeterministicHash { cost }
    }
}

fn script_entry(
    map: &HashMap<Url, (TrustScore, Duration)>,
    url: &Url,
) -> Result<(TrustScore, Duration), EvalError> {
    map.get(url)
        .copied()
        .ok_or_else(|| EvalError::UnknownUrl(url.clone()))
}

impl TrustEvaluator for Evaluator {
    fn score(&self, url: &Url) -> Result<TrustScore, EvalError> {
        match self {
            Evaluator::DeterministicHash { .. } => Ok(hash_score(url)),
            Evaluator::FixedCost { score, .. } => Ok(*score),
            Evaluator::Scripted(map) => script_entry(map, url).map(|(s, _)| s),
        }
    }

    fn cost(&self, url: &Url) -> Result<Duration, EvalError> {
        match self {
            Evaluator::DeterministicHash { cost } | Evaluator::FixedCost { cost, .. } => Ok(*cost),
            Evaluator::Scripted(map) => script_entry(map, url).map(|(_, c)| c),
        }
    }

    fn max_cost(&self) -> Duration {
        match self {
            Evaluator::DeterministicHash { cost } | Evaluator::FixedCost { cost, .. } => *cost,
            Evaluator::Scripted(map) => map.values().map(|&(_, c)| c).max().unwrap_or_default(),
        }
    }
}

/// Ground-truth scores for `items`: every URL scored with no deadline and no
/// clock involved.
pub fn oracle_scores(
    evaluator: &dyn TrustEvaluator,
    items: &[WorkItem],
) -> Result<HashMap<Url, TrustScore>, EvalError> {
    items
        .iter()
        .map(|item| Ok((item.url.clone(), evaluator.score(&item.url)?)))
        .collect()
}
