use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionBackend, CompletionRequest, CompletionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplayMode {
    /// Only answer from the store.
    #[default]
    Replay,
    /// Always ask the inner backend and store the answer.
    Record,
    /// Answer from the store, falling back to the inner backend on misses.
    RecordMissing,
}

#[derive(Serialize, Deserialize)]
struct StoreLine {
    digest: String,
    text: String,
}

/// Digest-to-completion map persisted as JSON lines of
/// `{"digest": ..., "text": ...}`.
#[derive(Debug)]
pub struct ReplayStore {
    mode: ReplayMode,
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, String>>,
    appender: Mutex<Option<File>>,
}

fn insert_checked(
    map: &mut BTreeMap<String, String>,
    digest: &str,
    text: &str,
) -> Result<bool, BackendError> {
    match map.get(digest) {
        Some(existing) if existing == text => Ok(false),
        Some(_) => Err(BackendError::DigestConflict {
            digest: digest.to_string(),
        }),
        None => {
            map.insert(digest.to_string(), text.to_string());
            Ok(true)
        }
    }
}

impl ReplayStore {
    pub fn in_memory(mode: ReplayMode) -> Self {
        ReplayStore {
            mode,
            path: None,
            entries: Mutex::new(BTreeMap::new()),
            appender: Mutex::new(None),
        }
    }

    /// Parses JSON-lines text. Blank lines are skipped; a digest repeated
    /// with different text is rejected.
    pub fn parse(text: &str, mode: ReplayMode) -> Result<Self, BackendError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: StoreLine =
                serde_json::from_str(line).map_err(|e| BackendError::MalformedStore {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if parsed.digest.len() != 64 || !parsed.digest.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(BackendError::MalformedStore {
                    line: i + 1,
                    message: "digest is not 64 hex digits".into(),
                });
            }
            insert_checked(
                &mut entries,
                &parsed.digest.to_ascii_lowercase(),
                &parsed.text,
            )?;
        }
        Ok(ReplayStore {
            mode,
            path: None,
            entries: Mutex::new(entries),
            appender: Mutex::new(None),
        })
    }

    /// Opens a store file. Replay mode requires the file to exist; the
    /// recording modes create it and append every new entry as it arrives.
    pub fn open(path: impl AsRef<Path>, mode: ReplayMode) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && mode != ReplayMode::Replay => {
                String::new()
            }
            Err(e) => return Err(e.into()),
        };
        let mut store = ReplayStore::parse(&text, mode)?;
        store.path = Some(path.to_path_buf());
        if mode != ReplayMode::Replay {
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            store.appender = Mutex::new(Some(file));
        }
        Ok(store)
    }

    pub fn mode(&self) -> ReplayMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, digest: &str) -> Option<String> {
        self.entries
            .lock()
            .expect("store poisoned")
            .get(digest)
            .cloned()
    }

    pub fn lookup(&self, request: &CompletionRequest) -> Option<String> {
        self.get(&request.digest())
    }

    /// Stores `text` for `request`. Recording the same text twice is a
    /// no-op; different text under the same digest is a conflict.
    pub fn record(&self, request: &CompletionRequest, text: &str) -> Result<(), BackendError> {
        if self.mode == ReplayMode::Replay {
            return Err(BackendError::ReadOnlyStore);
        }
        let digest = request.digest();
        let mut entries = self.entries.lock().expect("store poisoned");
        if insert_checked(&mut entries, &digest, text)? {
            if let Some(file) = self.appender.lock().expect("appender poisoned").as_mut() {
                let line = serde_json::to_string(&StoreLine {
                    digest,
                    text: text.to_string(),
                })
                .expect("store line serializes");
                writeln!(file, "{line}")?;
                file.flush()?;
            }
        }
        Ok(())
    }

    /// All entries as JSON lines, sorted by digest.
    pub fn to_jsonl(&self) -> String {
        let entries = self.entries.lock().expect("store poisoned");
        let mut out = String::new();
        for (digest, text) in entries.iter() {
            let line = StoreLine {
                digest: digest.clone(),
                text: text.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("store line serializes"));
            out.push('\n');
        }
        out
    }

    /// Rewrites the backing file sorted by digest, so that the file only
    /// depends on its contents and not on arrival order.
    pub fn compact(&self) -> Result<(), BackendError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut appender = self.appender.lock().expect("appender poisoned");
        let tmp = path.with_extension("jsonl.tmp");
        std::fs::write(&tmp, self.to_jsonl())?;
        std::fs::rename(&tmp, path)?;
        if appender.is_some() {
            *appender = Some(OpenOptions::new().append(true).open(path)?);
        }
        Ok(())
    }
}

/// Answers from a [`ReplayStore`], optionally recording from an inner
/// backend depending on the store's mode.
pub struct ReplayBackend {
    id: String,
    store: Arc<ReplayStore>,
    inner: Option<Arc<dyn CompletionBackend>>,
}

impl ReplayBackend {
    pub fn new(id: impl Into<String>, store: Arc<ReplayStore>) -> Self {
        ReplayBackend {
            id: id.into(),
            store,
            inner: None,
        }
    }

    pub fn with_inner(mut self, inner: Arc<dyn CompletionBackend>) -> Self {
        self.inner = Some(inner);
        self
    }

    pub fn store(&self) -> &ReplayStore {
        &self.store
    }

    fn ask_inner(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let inner = self
            .inner
            .as_ref()
            .ok_or_else(|| BackendError::Config("recording requires an inner backend".into()))?;
        let result = inner.complete(request)?;
        self.store.record(request, &result.text)?;
        Ok(CompletionResult {
            backend_id: self.id.clone(),
            ..result
        })
    }
}

impl CompletionBackend for ReplayBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        let started = Instant::now();
        let hit = |text: String| CompletionResult {
            text,
            backend_id: self.id.clone(),
            latency: started.elapsed(),
            attempt_count: 1,
        };
        match self.store.mode() {
            ReplayMode::Replay => {
                self.store
                    .lookup(request)
                    .map(hit)
                    .ok_or_else(|| BackendError::MissingFixture {
                        digest: request.digest(),
                    })
            }
            ReplayMode::RecordMissing => match self.store.lookup(request) {
                Some(text) => Ok(hit(text)),
                None => self.ask_inner(request),
            },
            ReplayMode::Record => self.ask_inner(request),
        }
    }
}
