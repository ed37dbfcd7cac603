//! Completion backends.
//!
//! Every backend implements [`CompletionBackend`]. [`HttpBackend`] talks to
//! any JSON-over-HTTP completion server; [`ReplayBackend`] answers from a
//! digest-keyed [`ReplayStore`] and can record into it from another
//! backend.

mod http;
mod replay;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::{EndpointConfig, FieldMapping, HttpBackend, RetryPolicy};
pub use replay::{ReplayBackend, ReplayMode, ReplayStore};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("remote error {status} after {attempts} attempt(s): {body}")]
    RemoteError {
        status: u16,
        body: String,
        attempts: u32,
    },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no replay fixture for request digest {digest}")]
    MissingFixture { digest: String },
    #[error("request budget of {limit} exhausted")]
    BudgetExceeded { limit: usize },
    #[error("digest {digest} already holds a different completion")]
    DigestConflict { digest: String },
    #[error("replay store is read-only")]
    ReadOnlyStore,
    #[error("replay store line {line}: {message}")]
    MalformedStore { line: usize, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const DEFAULT_MAX_TOKENS: u32 = 256;
pub const DEFAULT_STOP: [&str; 2] = ["\n\n", "English:"];

/// Decoding request. Field order here is irrelevant to its digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub stop: Vec<String>,
}

impl CompletionRequest {
    /// Greedy decoding with the default length and stop sequences.
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: 0.0,
            stop: DEFAULT_STOP.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidRequest(
                "max_tokens must be at least 1".into(),
            ));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidRequest(
                "temperature must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form: keys sorted, no whitespace.
    pub fn digest(&self) -> String {
        // serde_json's default map is ordered, so going through Value sorts keys
        let value = serde_json::to_value(self).expect("request serializes");
        crate::sha256_hex(value.to_string())
    }

    /// Cuts `text` at the earliest stop sequence.
    pub fn truncate_at_stop<'a>(&self, text: &'a str) -> &'a str {
        let cut = self
            .stop
            .iter()
            .filter(|s| !s.is_empty())
            .filter_map(|s| text.find(s.as_str()))
            .min()
            .unwrap_or(text.len());
        &text[..cut]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    /// Raw continuation with the stop sequence excluded.
    pub text: String,
    pub backend_id: String,
    pub latency: Duration,
    pub attempt_count: u32,
}

/// Anything that turns a prompt into a continuation. Implementations must
/// tolerate concurrent calls.
pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> &str;

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for std::sync::Arc<B> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

pub const DEFAULT_PARALLELISM: usize = 4;

/// Runs `requests` through `backend` with at most `parallelism` in flight.
/// Results are keyed by the caller's ids, never by completion order.
pub fn complete_all<B: CompletionBackend + ?Sized>(
    backend: &B,
    requests: &[(String, CompletionRequest)],
    parallelism: usize,
) -> BTreeMap<String, Result<CompletionResult, BackendError>> {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(BTreeMap::new());
    let workers = parallelism.max(1).min(requests.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((id, request)) = requests.get(i) else {
                    break;
                };
                let outcome = request.validate().and_then(|_| backend.complete(request));
                results
                    .lock()
                    .expect("result map poisoned")
                    .insert(id.clone(), outcome);
            });
        }
    });
    results.into_inner().expect("result map poisoned")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn digest_ignores_wire_field_order() {
        let a: CompletionRequest = serde_json::from_str(
            r#"{"prompt":"p","max_tokens":8,"temperature":0.0,"stop":["\n\n"]}"#,
        )
        .unwrap();
        let b: CompletionRequest = serde_json::from_str(
            r#"{"stop":["\n\n"],"temperature":0.0,"prompt":"p","max_tokens":8}"#,
        )
        .unwrap();
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.max_tokens = 9;
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn validation() {
        let mut r = CompletionRequest::new("p");
        assert!(r.validate().is_ok());
        r.max_tokens = 0;
        assert!(r.validate().is_err());
        r.max_tokens = 1;
        r.temperature = -0.5;
        assert!(r.validate().is_err());
    }

    #[test]
    fn stop_truncation() {
        let r = CompletionRequest::new("p");
        assert_eq!(
            r.truncate_at_stop(" Hola.\nSpanish (feminine): Hola.\n\nEnglish: x"),
            " Hola.\nSpanish (feminine): Hola."
        );
        assert_eq!(r.truncate_at_stop(" Hola. English: x"), " Hola. ");
        assert_eq!(r.truncate_at_stop("plain"), "plain");
    }

    struct Echo {
        calls: AtomicUsize,
    }

    impl CompletionBackend for Echo {
        fn id(&self) -> &str {
            "echo"
        }

        fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(CompletionResult {
                text: request.prompt.to_uppercase(),
                backend_id: "echo".into(),
                latency: Duration::ZERO,
                attempt_count: 1,
            })
        }
    }

    #[test]
    fn fan_out_keys_results_by_id() {
        let echo = Echo {
            calls: AtomicUsize::new(0),
        };
        let requests: Vec<_> = (0..25)
            .map(|i| (format!("q{i:02}"), CompletionRequest::new(format!("p{i}"))))
            .collect();
        let results = complete_all(&echo, &requests, 4);
        assert_eq!(results.len(), 25);
        assert_eq!(echo.calls.load(Ordering::SeqCst), 25);
        assert_eq!(results["q07"].as_ref().unwrap().text, "P7");
    }
}
