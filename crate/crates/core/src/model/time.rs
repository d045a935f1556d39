//! Integer-microsecond time and the injected clock.

use std::ops::{Add, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A non-negative span of time in microseconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Duration(u64);

impl Duration {
    pub const ZERO: Duration = Duration(0);

    pub const fn from_micros(us: u64) -> Self {
        Duration(us)
    }

    /// Converts a signed count, rejecting negative spans.
    pub fn from_signed_micros(us: i64) -> Result<Self, ModelError> {
        u64::try_from(us)
            .map(Duration)
            .map_err(|_| ModelError::NegativeDuration(us))
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn saturating_mul(self, n: u64) -> Duration {
        Duration(self.0.saturating_mul(n))
    }

    pub fn to_std(self) -> std::time::Duration {
        std::time::Duration::from_micros(self.0)
    }
}

impl Add for Duration {
    type Output = Duration;

    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0.saturating_add(rhs.0))
    }
}

/// A point in time, in microseconds since the owning clock's origin.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Instant(u64);

impl Instant {
    pub const ORIGIN: Instant = Instant(0);

    pub const fn from_micros(us: u64) -> Self {
        Instant(us)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    /// Time elapsed since `earlier`, zero if `earlier` is later.
    pub fn since(self, earlier: Instant) -> Duration {
        Duration(self.0.saturating_sub(earlier.0))
    }
}

impl Add<Duration> for Instant {
    type Output = Instant;

    fn add(self, rhs: Duration) -> Instant {
        Instant(self.0.saturating_add(rhs.0))
    }
}

impl Sub for Instant {
    type Output = Duration;

    fn sub(self, rhs: Instant) -> Duration {
        self.since(rhs)
    }
}

/// Source of monotone time. Evaluation work is charged through [`Clock::spend`].
pub trait Clock {
    fn now(&self) -> Instant;

    /// Accounts for `cost` of work: a virtual clock jumps forward, a wall
    /// clock actually waits.
    fn spend(&self, cost: Duration);
}

/// Deterministic logical clock. Time moves only through `advance`/`spend`.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now_us: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(origin: Instant) -> Self {
        VirtualClock {
            now_us: AtomicU64::new(origin.0),
        }
    }

    pub fn advance(&self, d: Duration) -> Instant {
        let prev = self
            .now_us
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |t| {
                Some(t.saturating_add(d.0))
            })
            .unwrap_or_else(|t| t);
        Instant(prev.saturating_add(d.0))
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Instant {
        Instant(self.now_us.load(Ordering::Acquire))
    }

    fn spend(&self, cost: Duration) {
        self.advance(cost);
    }
}

/// OS monotone time measured from construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    origin: std::time::Instant,
}

impl WallClock {
    pub fn new() -> Self {
        WallClock {
            origin: std::time::Instant::now(),
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> Instant {
        let us = self.origin.elapsed().as_micros();
        Instant(u64::try_from(us).unwrap_or(u64::MAX))
    }

    fn spend(&self, cost: Duration) {
        if cost > Duration::ZERO {
            std::thread::sleep(cost.to_std());
        }
    }
}
