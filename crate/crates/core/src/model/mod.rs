//! Shared domain types: URLs, the trust scale, time, load parameters and
//! the batch report produced by every engine.

mod score;
mod time;
mod url;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use score::{TrustScore, TRUST_MAX, TRUST_MIN};
pub use time::{Clock, Duration, Instant, VirtualClock, WallClock};
pub use url::{normalize, Url};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("url is empty after normalization")]
    EmptyUrl,
    #[error("trust score {0} outside [{TRUST_MIN}, {TRUST_MAX}]")]
    ScoreOutOfRange(f64),
    #[error("negative duration: {0} us")]
    NegativeDuration(i64),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

/// Tunables of the shedder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadParameters {
    /// Items that can be fully evaluated within `deadline_normal`.
    pub u_capacity: usize,
    /// Extra items beyond capacity tolerated before the very-heavy regime.
    pub u_threshold: usize,
    #[serde(rename = "deadline_normal_us")]
    pub deadline_normal: Duration,
    #[serde(rename = "deadline_overload_us")]
    pub deadline_overload: Duration,
    pub extension_weight: f64,
    pub max_extension_factor: f64,
    pub default_trust: TrustScore,
}

impl LoadParameters {
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |field, reason: &str| {
            Err(ModelError::InvalidParameter {
                field,
                reason: reason.to_owned(),
            })
        };
        if self.u_capacity < 1 {
            return invalid("u_capacity", "must be at least 1");
        }
        if self.deadline_overload < self.deadline_normal {
            return invalid(
                "deadline_overload_us",
                "must be greater than or equal to deadline_normal_us",
            );
        }
        if !(self.extension_weight.is_finite() && self.extension_weight >= 0.0) {
            return invalid("extension_weight", "must be a finite value >= 0");
        }
        if !(self.max_extension_factor.is_finite() && self.max_extension_factor >= 1.0) {
            return invalid("max_extension_factor", "must be a finite value >= 1");
        }
        Ok(())
    }

    /// Upper boundary of the heavy regime, `u_capacity + u_threshold`.
    pub fn overload_limit(&self) -> usize {
        self.u_capacity.saturating_add(self.u_threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoadClass {
    Normal,
    Heavy,
    VeryHeavy,
}

impl fmt::Display for LoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoadClass::Normal => "normal",
            LoadClass::Heavy => "heavy",
            LoadClass::VeryHeavy => "very_heavy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkItem {
    pub url: Url,
    pub arrival_index: usize,
}

impl WorkItem {
    /// Wraps a batch, numbering items 0.. in order.
    pub fn batch(urls: &[Url]) -> Vec<WorkItem> {
        urls.iter()
            .enumerate()
            .map(|(arrival_index, url)| WorkItem {
                url: url.clone(),
                arrival_index,
            })
            .collect()
    }
}

/// How an item got its score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    Evaluated,
    CacheHit,
    /// Assigned the batch average after the deadline passed.
    Averaged,
    /// Shed without a score; only the random-drop baseline produces this.
    Dropped,
}

impl Provenance {
    pub const ALL: [Provenance; 4] = [
        Provenance::Evaluated,
        Provenance::CacheHit,
        Provenance::Averaged,
        Provenance::Dropped,
    ];
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Evaluated => "evaluated",
            Provenance::CacheHit => "cache_hit",
            Provenance::Averaged => "averaged",
            Provenance::Dropped => "dropped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredItem {
    pub url: Url,
    pub arrival_index: usize,
    pub score: TrustScore,
    pub provenance: Provenance,
    pub scored_at: Instant,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProvenanceCounts {
    pub evaluated: usize,
    pub cache_hit: usize,
    pub averaged: usize,
    pub dropped: usize,
}

impl ProvenanceCounts {
    pub fn tally<'a>(items: impl IntoIterator<Item = &'a ScoredItem>) -> Self {
        let mut counts = ProvenanceCounts::default();
        for item in items {
            *counts.slot(item.provenance) += 1;
        }
        counts
    }

    pub fn get(&self, provenance: Provenance) -> usize {
        match provenance {
            Provenance::Evaluated => self.evaluated,
            Provenance::CacheHit => self.cache_hit,
            Provenance::Averaged => self.averaged,
            Provenance::Dropped => self.dropped,
        }
    }

    pub fn total(&self) -> usize {
        self.evaluated + self.cache_hit + self.averaged + self.dropped
    }

    fn slot(&mut self, provenance: Provenance) -> &mut usize {
        match provenance {
            Provenance::Evaluated => &mut self.evaluated,
            Provenance::CacheHit => &mut self.cache_hit,
            Provenance::Averaged => &mut self.averaged,
            Provenance::Dropped => &mut self.dropped,
        }
    }
}

/// Complete outcome of one batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    /// Scored items in arrival order.
    pub items: Vec<ScoredItem>,
    pub uload: usize,
    pub load_class: LoadClass,
    pub effective_deadline: Duration,
    pub elapsed: Duration,
    pub counts: ProvenanceCounts,
}

impl BatchReport {
    pub fn count(&self, provenance: Provenance) -> usize {
        self.counts.get(provenance)
    }
}
