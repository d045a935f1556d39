use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

/// A normalized URL.
///
/// Normalization trims surrounding whitespace, lowercases the scheme and
/// host, and strips trailing slashes. Everything after the host (path,
/// query, fragment) is kept byte-for-byte, so two URLs that differ only in
/// path case remain distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Url(String);

impl Url {
    pub fn parse(raw: &str) -> Result<Self, ModelError> {
        let normalized = normalize(raw);
        if normalized.is_empty() {
            return Err(ModelError::EmptyUrl);
        }
        Ok(Url(normalized))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Normalizes `raw` without validating it. Idempotent.
pub fn normalize(raw: &str) -> String {
    let trimmed = raw.trim();
    // Authority starts after "scheme://" when present, otherwise at offset 0.
    let (prefix, rest) = match trimmed.find("://") {
        Some(pos) => trimmed.split_at(pos + 3),
        None => ("", trimmed),
    };
    let host_end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let (host, tail) = rest.split_at(host_end);

    let mut out = String::with_capacity(trimmed.len());
    out.push_str(&prefix.to_ascii_lowercase());
    out.push_str(&host.to_ascii_lowercase());
    out.push_str(tail);
    let kept = out
        .trim_end_matches(|c: char| c == '/' || c.is_whitespace())
        .len();
    out.truncate(kept);
    out
}

impl fmt::Display for Url {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Url {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Url::parse(s)
    }
}

impl Serialize for Url {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Url {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Url::parse(&raw).map_err(serde::de::Error::custom)
    }
}
