//! Content-addressed on-disk cache for expensive intermediate results.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Hex SHA-256 of the JSON encoding of `key`.
pub fn content_hash<K: Serialize + ?Sized>(key: &K) -> Result<String> {
    let bytes = serde_json::to_vec(key)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Hex SHA-256 of a float slice (bit patterns, little-endian).
pub fn hash_f64s(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Cache rooted at an optional directory; without one every lookup misses.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf) })
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    fn path(&self, kind: &str, hash: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{kind}-{hash}.json")))
    }

    /// Return the cached value for `(kind, key)` or compute and store it.
    /// Unreadable entries are recomputed and overwritten.
    pub fn get_or_compute<K, T, F>(&self, kind: &str, key: &K, compute: F) -> Result<T>
    where
        K: Serialize + ?Sized,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let Some(path) = self.path(kind, &content_hash(key)?) else {
            return compute();
        };
        if let Ok(text) = std::fs::read_to_string(&path) {
            match serde_json::from_str(&text) {
                Ok(v) => {
                    log::debug!("cache hit {}", path.display());
                    return Ok(v);
                }
                Err(e) => log::warn!("ignoring corrupt cache entry {}: {e}", path.display()),
            }
        }
        let v = compute()?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(&v)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(v)
    }
}
