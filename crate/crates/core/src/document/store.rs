use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use super::{from_json, to_canonical_json, DocumentError, DocumentRecord};

pub type SharedDocument = Arc<Mutex<DocumentRecord>>;

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

pub fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn io_err(e: io::Error) -> DocumentError {
    DocumentError::Io(e.to_string())
}

/// One JSON file per document in a directory, with per-document locks.
pub struct DocumentStore {
    dir: PathBuf,
    open: Mutex<HashMap<String, SharedDocument>>,
}

impl DocumentStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, DocumentError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err)?;
        Ok(DocumentStore { dir, open: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, id: &str) -> Option<PathBuf> {
        valid_id(id).then(|| self.dir.join(format!("{id}.json")))
    }

    pub fn create(&self, text: &str) -> Result<SharedDocument, DocumentError> {
        let doc = DocumentRecord::new(new_id(), text, now_ms());
        let path = self.path_for(&doc.id).expect("generated ids are valid");
        save_file(&path, &doc)?;
        let id = doc.id.clone();
        let shared = Arc::new(Mutex::new(doc));
        self.open.lock().unwrap().insert(id, shared.clone());
        Ok(shared)
    }

    /// The open document, loading it from disk on first use.
    pub fn get(&self, id: &str) -> Result<SharedDocument, DocumentError> {
        let not_found = || DocumentError::NotFound(format!("document {id}"));
        let path = self.path_for(id).ok_or_else(not_found)?;
        let mut open = self.open.lock().unwrap();
        if let Some(doc) = open.get(id) {
            return Ok(doc.clone());
        }
        let doc = match load_file(&path) {
            Err(DocumentError::Io(_)) if !path.exists() => return Err(not_found()),
            other => other?,
        };
        if doc.id != id {
            return Err(DocumentError::Corrupt(format!("file {} holds document {}", path.display(), doc.id)));
        }
        let shared = Arc::new(Mutex::new(doc));
        open.insert(id.to_string(), shared.clone());
        Ok(shared)
    }

    /// Runs `f` on a copy of the document and persists the copy only when
    /// `f` succeeds, so a failed operation leaves memory and disk untouched.
    pub fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut DocumentRecord) -> Result<T, DocumentError>,
    ) -> Result<T, DocumentError> {
        self.mutate_then(id, f, |_| ())
    }

    /// Like [`mutate`](Self::mutate); `committed` runs after the save while
    /// the document is still locked, so it observes commits in order.
    pub fn mutate_then<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut DocumentRecord) -> Result<T, DocumentError>,
        committed: impl FnOnce(&T),
    ) -> Result<T, DocumentError> {
        let shared = self.get(id)?;
        let mut guard = shared.lock().unwrap_or_else(|p| p.into_inner());
        let mut draft = guard.clone();
        let out = f(&mut draft)?;
        save_file(&self.path_for(id).expect("checked by get"), &draft)?;
        *guard = draft;
        committed(&out);
        Ok(out)
    }

    pub fn read<T>(&self, id: &str, f: impl FnOnce(&DocumentRecord) -> T) -> Result<T, DocumentError> {
        let shared = self.get(id)?;
        let guard = shared.lock().unwrap_or_else(|p| p.into_inner());
        Ok(f(&guard))
    }
}

pub fn load_file(path: &Path) -> Result<DocumentRecord, DocumentError> {
    from_json(&fs::read(path).map_err(io_err)?)
}

/// Writes through a temporary sibling file and a rename.
pub fn save_file(path: &Path, doc: &DocumentRecord) -> Result<(), DocumentError> {
    let bytes = to_canonical_json(doc);
    let dir = path.parent().unwrap_or(Path::new("."));
    let tmp = dir.join(format!(".{}.{}.tmp", path.file_name().and_then(|n| n.to_str()).unwrap_or("doc"), new_id()));
    let write = || -> io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}
