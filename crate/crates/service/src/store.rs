//! Session store: in memory, mirrored to one JSON file per session when a
//! data directory is configured.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::session::Session;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session {0:?} not found")]
    NotFound(String),
    #[error("storage error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt session file {path}: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
}

pub type SessionHandle = Arc<RwLock<Session>>;

/// Sessions are locked individually; the map lock is only held to look
/// them up or insert them.
#[derive(Default)]
pub struct Store {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Store {
    pub fn in_memory() -> Self {
        Store::default()
    }

    /// Opens (creating if needed) a data directory and loads every session in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let session: Session =
                serde_json::from_str(&text).map_err(|source| StoreError::Corrupt {
                    path: path.clone(),
                    source,
                })?;
            sessions.insert(session.session_id.clone(), Arc::new(RwLock::new(session)));
        }
        log::info!(
            "loaded {} session(s) from {}",
            sessions.len(),
            dir.display()
        );
        Ok(Store {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, StoreError> {
        self.sessions
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn insert(&self, session: Session) -> Result<SessionHandle, StoreError> {
        self.persist(&session)?;
        let id = session.session_id.clone();
        let handle = Arc::new(RwLock::new(session));
        self.sessions
            .write()
            .expect("store lock")
            .insert(id, handle.clone());
        Ok(handle)
    }

    /// Writes the session file atomically (temp file, then rename).
    pub fn persist(&self, session: &Session) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = dir.join(format!("{}.json", session.session_id));
        let tmp = dir.join(format!(".{}.json.tmp", session.session_id));
        fs::write(&tmp, session.to_canonical_json()).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}
