use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

/// Lower bound of the trust scale.
pub const TRUST_MIN: f64 = 0.0;
/// Upper bound of the trust scale.
pub const TRUST_MAX: f64 = 5.0;

/// A trustworthiness value on the closed interval `[TRUST_MIN, TRUST_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TrustScore(f64);

impl TrustScore {
    pub fn new(value: f64) -> Result<Self, ModelError> {
        if (TRUST_MIN..=TRUST_MAX).contains(&value) {
            Ok(TrustScore(value))
        } else {
            Err(ModelError::ScoreOutOfRange(value))
        }
    }

    /// Clamps into range. NaN maps to the lower bound.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            return TrustScore(TRUST_MIN);
        }
        TrustScore(value.clamp(TRUST_MIN, TRUST_MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for TrustScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.0)
    }
}

impl TryFrom<f64> for TrustScore {
    type Error = ModelError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        TrustScore::new(value)
    }
}

impl Serialize for TrustScore {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for TrustScore {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        TrustScore::new(value).map_err(serde::de::Error::custom)
    }
}
