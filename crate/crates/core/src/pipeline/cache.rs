use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{PipelineError, Stage};

/// Stage results stored as JSON under `<output>/cache`, named by the
/// stage and a hash of everything the result depends on. Floats
/// round-trip exactly, so a hit is bit-identical to a recomputation.
pub(crate) struct Cache {
    dir: Option<PathBuf>,
}

/// Root of every key; changes whenever stage results may change.
pub(crate) const CACHE_VERSION: &str = concat!("stressline-", env!("CARGO_PKG_VERSION"), "-cache-1");

/// Extends `prev` with a tagged, serialized value.
pub(crate) fn chain_key(prev: &str, tag: &str, value: &impl Serialize) -> String {
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update([0]);
    h.update(tag.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(value).expect("config values serialize"));
    hex::encode(h.finalize())
}

pub(crate) fn bytes_key(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    fn path(&self, stage: Stage, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{stage}-{key}.json")))
    }

    pub fn load<T: DeserializeOwned>(&self, stage: Stage, key: &str) -> Option<T> {
        let path = self.path(stage, key)?;
        let bytes = std::fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Stores `value`, replacing older entries of the same stage.
    pub fn store<T: Serialize>(&self, stage: Stage, key: &str, value: &T) -> Result<(), PipelineError> {
        let (Some(dir), Some(path)) = (&self.dir, self.path(stage, key)) else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        if let Ok(entries) = std::fs::read_dir(dir) {
            let prefix = format!("{stage}-");
            for e in entries.flatten() {
                if e.file_name().to_string_lossy().starts_with(&prefix) {
                    let _ = std::fs::remove_file(e.path());
                }
            }
        }
        let bytes = serde_json::to_vec(value).map_err(|e| PipelineError::stage(stage, e))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| PipelineError::io(&path, e))
    }
}
