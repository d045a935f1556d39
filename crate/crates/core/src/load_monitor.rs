//! Regime classification, capacity calibration and the very-heavy deadline
//! extension.

use thiserror::Error;

use crate::model::{Duration, LoadClass, LoadParameters};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("deadline extension requested for a {0} batch")]
    NotVeryHeavy(LoadClass),
    #[error("calibration sample needs a positive cost and at least one sample")]
    InvalidSample,
}

/// Mean per-item evaluation cost measured over `sample_count` evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibrationSample {
    per_item_cost: Duration,
    sample_count: usize,
}

impl CalibrationSample {
    pub fn new(per_item_cost: Duration, sample_count: usize) -> Result<Self, MonitorError> {
        if per_item_cost == Duration::ZERO || sample_count == 0 {
            return Err(MonitorError::InvalidSample);
        }
        Ok(CalibrationSample {
            per_item_cost,
            sample_count,
        })
    }

    /// Builds a sample from a total cost measured over `sample_count` runs.
    pub fn from_total(total: Duration, sample_count: usize) -> Result<Self, MonitorError> {
        if sample_count == 0 {
            return Err(MonitorError::InvalidSample);
        }
        let mean = total.as_micros() / sample_count as u64;
        Self::new(Duration::from_micros(mean), sample_count)
    }

    pub fn per_item_cost(&self) -> Duration {
        self.per_item_cost
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

pub fn classify_load(uload: usize, params: &LoadParameters) -> LoadClass {
    if uload <= params.u_capacity {
        LoadClass::Normal
    } else if uload <= params.overload_limit() {
        LoadClass::Heavy
    } else {
        LoadClass::VeryHeavy
    }
}

/// Largest item count whose total cost fits in `safety_factor * deadline_normal`,
/// never less than 1.
pub fn calibrate_capacity(
    sample: &CalibrationSample,
    deadline_normal: Duration,
    safety_factor: f64,
) -> usize {
    let budget = safety_factor * deadline_normal.as_micros() as f64;
    let fit = floor_micros(budget / sample.per_item_cost.as_micros() as f64);
    (fit as usize).max(1)
}

/// Deadline enforced for a very-heavy batch: `deadline_overload` grown in
/// proportion to how far `uload` exceeds `u_capacity + u_threshold`, capped
/// at `deadline_overload * max_extension_factor`.
pub fn extend_deadline(uload: usize, params: &LoadParameters) -> Result<Duration, MonitorError> {
    let class = classify_load(uload, params);
    if class != LoadClass::VeryHeavy {
        return Err(MonitorError::NotVeryHeavy(class));
    }
    let base = params.deadline_overload.as_micros();
    let limit = params.overload_limit() as f64;
    let excess = (uload - params.overload_limit()) as f64;

    // Multiply before dividing so exact ratios stay exact in f64.
    let extra = floor_micros(base as f64 * params.extension_weight * excess / limit);
    let extended = base.saturating_add(extra as u64);
    let cap = floor_micros(base as f64 * params.max_extension_factor) as u64;
    Ok(Duration::from_micros(extended.min(cap).max(base)))
}

/// Floors a microsecond quantity, treating values within 1e-6 of an integer
/// as that integer (decimal factors such as 1.2 are inexact in binary).
fn floor_micros(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() < 1e-6 {
        nearest
    } else {
        x.floor()
    }
}
