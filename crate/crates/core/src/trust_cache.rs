//! Persistent URL -> trust score store, consulted before evaluation.
//!
//! On disk the cache is UTF-8 JSON lines, one entry per line:
//!
//! ```text
//! {"url":"http://a.com","trust":4.2,"evaluated_at":10000}
//! ```
//!
//! Unknown keys are rejected. A later line for the same URL replaces an
//! earlier one.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{PoisonError, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instant, TrustScore, Url};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o: {0}")]
    Io(#[from] io::Error),
    #[error("cache line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustCacheEntry {
    pub url: Url,
    #[serde(rename = "trust")]
    pub score: TrustScore,
    pub evaluated_at: Instant,
}

/// In-memory trust store. Lookups share a read lock; inserts take the write
/// lock for a single entry.
#[derive(Debug, Default)]
pub struct TrustCache {
    entries: RwLock<HashMap<Url, TrustCacheEntry>>,
}

impl TrustCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, url: &Url) -> Option<TrustScore> {
        self.read(|map| map.get(url).map(|e| e.score))
    }

    pub fn insert(&self, url: Url, score: TrustScore, at: Instant) {
        let mut map = self.entries.write().unwrap_or_else(PoisonError::into_inner);
        map.insert(
            url.clone(),
            TrustCacheEntry {
                url,
                score,
                evaluated_at: at,
            },
        );
    }

    pub fn len(&self) -> usize {
        self.read(HashMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of all entries sorted by URL.
    pub fn entries(&self) -> Vec<TrustCacheEntry> {
        let mut entries: Vec<_> = self.read(|map| map.values().cloned().collect());
        entries.sort_by(|a, b| a.url.cmp(&b.url));
        entries
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<usize, CacheError> {
        let mut out = BufWriter::new(File::create(path)?);
        let count = self.write_to(&mut out)?;
        out.flush()?;
        Ok(count)
    }

    /// Writes entries sorted by URL so saved files are reproducible.
    pub fn write_to(&self, out: &mut impl Write) -> Result<usize, CacheError> {
        let entries = self.entries();
        for entry in &entries {
            serde_json::to_writer(&mut *out, entry).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(entries.len())
    }

    /// Loads a cache file. With `create_if_missing`, a missing file is an
    /// empty cache rather than an error.
    pub fn load(path: impl AsRef<Path>, create_if_missing: bool) -> Result<Self, CacheError> {
        match File::open(path) {
            Ok(file) => Self::read_from(BufReader::new(file)),
            Err(e) if create_if_missing && e.kind() == io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self, CacheError> {
        let cache = TrustCache::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = parse_line(&line).map_err(|message| CacheError::Malformed {
                line: idx + 1,
                message,
            })?;
            cache.insert(entry.url, entry.score, entry.evaluated_at);
        }
        Ok(cache)
    }

    /// Independent copy of the current contents.
    pub fn snapshot(&self) -> TrustCache {
        let map = self.read(Clone::clone);
        TrustCache {
            entries: RwLock::new(map),
        }
    }

    fn read<T>(&self, f: impl FnOnce(&HashMap<Url, TrustCacheEntry>) -> T) -> T {
        let map = self.entries.read().unwrap_or_else(PoisonError::into_inner);
        f(&map)
    }
}

/// Parses one JSON-lines record.
pub fn parse_line(line: &str) -> Result<TrustCacheEntry, String> {
    serde_json::from_str(line).map_err(|e| e.to_string())
}

impl PartialEq for TrustCache {
    fn eq(&self, other: &Self) -> bool {
        self.entries() == other.entries()
    }
}

impl FromIterator<TrustCacheEntry> for TrustCache {
    fn from_iter<I: IntoIterator<Item = TrustCacheEntry>>(iter: I) -> Self {
        let cache = TrustCache::new();
        for e in iter {
            cache.insert(e.url, e.score, e.evaluated_at);
        }
        cache
    }
}
