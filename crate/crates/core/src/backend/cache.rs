use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::BackendRequest;

/// Reply cache keyed by request and model, with optional on-disk spill.
///
/// Disk failures only ever turn into misses.
#[derive(Debug, Default)]
pub struct ResponseCache {
    memory: Mutex<HashMap<String, Vec<String>>>,
    dir: Option<PathBuf>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_spill(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { memory: Mutex::default(), dir: Some(dir.into()) }
    }

    /// Hex SHA-256 of (kind, slots, constraints, model).
    pub fn key(req: &BackendRequest, model: &str) -> String {
        let mut h = Sha256::new();
        h.update(req.canonical_json().as_bytes());
        h.update([0u8]);
        h.update(model.as_bytes());
        hex::encode(h.finalize())
    }

    fn spill_path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    pub fn lookup(&self, key: &str) -> Option<Vec<String>> {
        if let Some(hit) = self.memory.lock().ok()?.get(key) {
            return Some(hit.clone());
        }
        let path = self.spill_path(key)?;
        let texts: Vec<String> = serde_json::from_slice(&std::fs::read(path).ok()?).ok()?;
        if let Ok(mut m) = self.memory.lock() {
            m.insert(key.to_string(), texts.clone());
        }
        Some(texts)
    }

    pub fn store(&self, key: &str, texts: &[String]) {
        if let Ok(mut m) = self.memory.lock() {
            m.insert(key.to_string(), texts.to_vec());
        }
        if let Some(path) = self.spill_path(key) {
            let _ = write_atomic(&path, &serde_json::to_vec(texts).expect("strings serialize"));
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}
