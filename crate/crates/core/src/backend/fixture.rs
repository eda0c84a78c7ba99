//! Record/replay fixtures: a persisted mapping from request digest to
//! recorded backend response, enabling deterministic offline runs.
//!
//! Fixture files are append-only JSONL. Each line carries exactly:
//! `digest` (hex SHA-256 of the request), `text` (the raw completion),
//! `backend_id`, `model_name`, and `timestamp` (unix seconds at recording).

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{mock::elapsed_ms, Backend, BackendError, BackendResponse};
use crate::prompt::PromptBundle;

/// One fixture line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub digest: String,
    pub text: String,
    pub backend_id: String,
    pub model_name: String,
    pub timestamp: u64,
}

/// In-memory digest -> text map loaded from (and appended to) a fixture file.
#[derive(Debug)]
pub struct FixtureStore {
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
    writer: Mutex<Option<BufWriter<File>>>,
}

impl FixtureStore {
    /// Loads an existing fixture file, or starts empty when the file does
    /// not exist yet.
    pub fn open(path: &Path) -> Result<Self, BackendError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| BackendError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| BackendError::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: FixtureRecord = serde_json::from_str(&line).map_err(|e| BackendError::Io {
                    path: path.display().to_string(),
                    source: std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("bad fixture line {}: {e}", i + 1),
                    ),
                })?;
                entries.insert(record.digest, record.text);
            }
        }
        Ok(FixtureStore {
            path: path.to_path_buf(),
            entries: Mutex::new(entries),
            writer: Mutex::new(None),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, digest: &str) -> Option<String> {
        self.entries.lock().unwrap().get(digest).cloned()
    }

    /// Inserts and appends one line. Already-known digests are not
    /// rewritten, keeping the file append-only and free of duplicates.
    pub fn insert(&self, record: FixtureRecord) -> Result<(), BackendError> {
        {
            let mut entries = self.entries.lock().unwrap();
            if entries.contains_key(&record.digest) {
                return Ok(());
            }
            entries.insert(record.digest.clone(), record.text.clone());
        }
        let mut guard = self.writer.lock().unwrap();
        if guard.is_none() {
            if let Some(parent) = self.path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| BackendError::Io {
                    path: parent.display().to_string(),
                    source: e,
                })?;
            }
            let file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(|e| {
                BackendError::Io { path: self.path.display().to_string(), source: e }
            })?;
            *guard = Some(BufWriter::new(file));
        }
        let writer = guard.as_mut().expect("writer was just created");
        let line = serde_json::to_string(&record).expect("fixture record serialization cannot fail");
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .and_then(|_| writer.flush())
            .map_err(|e| BackendError::Io { path: self.path.display().to_string(), source: e })
    }
}

pub(crate) fn unix_timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Serves recorded responses bit-exactly with no network activity. A bundle
/// whose digest is absent from the fixture is a [`BackendError::FixtureMiss`],
/// signalling prompt drift relative to the recorded run.
pub struct ReplayBackend {
    backend_id: String,
    model_name: String,
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn open(path: &Path, backend_id: &str, model_name: &str) -> Result<Self, BackendError> {
        let store = FixtureStore::open(path)?;
        Ok(ReplayBackend {
            backend_id: backend_id.to_string(),
            model_name: model_name.to_string(),
            store,
        })
    }

    pub fn fixture_len(&self) -> usize {
        self.store.len()
    }
}

impl Backend for ReplayBackend {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn query(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError> {
        let start = Instant::now();
        let digest = self.digest(bundle);
        let text = self.store.get(&digest).ok_or(BackendError::FixtureMiss { digest: digest.clone() })?;
        Ok(BackendResponse {
            text,
            request_digest: digest,
            latency_ms: elapsed_ms(start),
            attempt_count: 0,
        })
    }
}

/// Wraps any backend and persists every (digest, text) pair it returns, so a
/// recording session doubles as a regression fixture.
pub struct RecordingBackend<B> {
    inner: B,
    store: FixtureStore,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn create(inner: B, fixture_path: &Path) -> Result<Self, BackendError> {
        let store = FixtureStore::open(fixture_path)?;
        Ok(RecordingBackend { inner, store })
    }

    pub fn recorded(&self) -> usize {
        self.store.len()
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn query(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError> {
        let response = self.inner.query(bundle)?;
        self.store.insert(FixtureRecord {
            digest: response.request_digest.clone(),
            text: response.text.clone(),
            backend_id: self.inner.backend_id().to_string(),
            model_name: self.inner.model_name().to_string(),
            timestamp: unix_timestamp(),
        })?;
        Ok(response)
    }
}
