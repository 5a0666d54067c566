//! Session persistence keyed by session id.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use interview_core::session::{restore, SessionStatus};
use interview_core::{DiagnosisReport, SessionState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStoreEntry {
    pub session_id: String,
    /// Snapshot document as produced by `SessionState::snapshot`.
    pub snapshot: String,
    pub updated_at: DateTime<Utc>,
    pub status: SessionStatus,
    /// Tree the session was started on.
    pub tree: String,
    /// Cached on first read so repeated reads are identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DiagnosisReport>,
}

impl SessionStoreEntry {
    pub fn new(tree: &str, state: &SessionState) -> Self {
        Self {
            session_id: state.session_id.clone(),
            snapshot: state.snapshot(),
            updated_at: Utc::now(),
            status: state.status,
            tree: tree.to_string(),
            report: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store io at {path}: {message}")]
    Io { path: String, message: String },
    #[error("store file {path} is corrupt: {message}")]
    Corrupt { path: String, message: String },
    #[error("snapshot for {0} is not a valid session")]
    InvalidSnapshot(String),
}

pub trait SessionStore: Send + Sync {
    fn get(&self, session_id: &str) -> Result<Option<SessionStoreEntry>, StoreError>;
    /// Inserts or replaces the entry for its session id.
    fn put(&self, entry: SessionStoreEntry) -> Result<(), StoreError>;
    fn ids(&self) -> Result<Vec<String>, StoreError>;
}

fn check(entry: &SessionStoreEntry) -> Result<(), StoreError> {
    match restore(&entry.snapshot) {
        Ok(s) if s.session_id == entry.session_id => Ok(()),
        _ => Err(StoreError::InvalidSnapshot(entry.session_id.clone())),
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    entries: Mutex<BTreeMap<String, SessionStoreEntry>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SessionStore for MemoryStore {
    fn get(&self, session_id: &str) -> Result<Option<SessionStoreEntry>, StoreError> {
        Ok(self.entries.lock().unwrap_or_else(|e| e.into_inner()).get(session_id).cloned())
    }

    fn put(&self, entry: SessionStoreEntry) -> Result<(), StoreError> {
        check(&entry)?;
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(entry.session_id.clone(), entry);
        Ok(())
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        Ok(self.entries.lock().unwrap_or_else(|e| e.into_inner()).keys().cloned().collect())
    }
}

/// All sessions in one JSON file, rewritten through a temp file and rename on every put.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    entries: Mutex<BTreeMap<String, SessionStoreEntry>>,
}

#[derive(Serialize, Deserialize)]
struct FileDocument {
    schema_version: u32,
    sessions: BTreeMap<String, SessionStoreEntry>,
}

impl FileStore {
    /// Opens `path`, creating nothing until the first write.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let entries = match fs::read_to_string(&path) {
            Ok(text) => {
                let doc: FileDocument = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                doc.sessions
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(io_err(&path, e)),
        };
        Ok(Self {
            path,
            entries: Mutex::new(entries),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write(&self, sessions: &BTreeMap<String, SessionStoreEntry>) -> Result<(), StoreError> {
        let doc = serde_json::to_vec(&FileDocument {
            schema_version: crate::SCHEMA_VERSION,
            sessions: sessions.clone(),
        })
        .expect("store document serializes");
        let mut tmp = self.path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(&doc).map_err(|e| io_err(&tmp, e))?;
        f.sync_all().map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &self.path).map_err(|e| io_err(&self.path, e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl SessionStore for FileStore {
    fn get(&self, session_id: &str) -> Result<Option<SessionStoreEntry>, StoreError> {
        Ok(self.entries.lock().unwrap_or_else(|e| e.into_inner()).get(session_id).cloned())
    }

    fn put(&self, entry: SessionStoreEntry) -> Result<(), StoreError> {
        check(&entry)?;
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = entries.clone();
        next.insert(entry.session_id.clone(), entry);
        self.write(&next)?;
        *entries = next;
        Ok(())
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        Ok(self.entries.lock().unwrap_or_else(|e| e.into_inner()).keys().cloned().collect())
    }
}
