use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{BackendError, CompletionBackend, CompletionRequest, CompletionResult};

/// Request and response field names on the wire. `response_text` is a JSON
/// pointer into the response body. An empty request field name leaves that
/// parameter out of the payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMapping {
    pub prompt: String,
    pub max_tokens: String,
    pub temperature: String,
    pub stop: String,
    pub response_text: String,
}

impl Default for FieldMapping {
    fn default() -> Self {
        FieldMapping {
            prompt: "prompt".into(),
            max_tokens: "max_tokens".into(),
            temperature: "temperature".into(),
            stop: "stop".into(),
            response_text: "/choices/0/text".into(),
        }
    }
}

/// Exponential backoff: attempt `i` (1-based) that fails with a transient
/// error waits `base_delay_ms * factor^(i-1)` before the next one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 1000,
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn delay_after(&self, attempt: u32) -> Duration {
        let ms = self.base_delay_ms as f64 * self.factor.powi(attempt.saturating_sub(1) as i32);
        Duration::from_millis(ms.min(u64::MAX as f64) as u64)
    }
}

fn default_path() -> String {
    "/v1/completions".into()
}

fn default_timeout() -> u64 {
    120
}

fn default_key_header() -> String {
    "Authorization".into()
}

fn default_key_prefix() -> String {
    "Bearer ".into()
}

fn default_id() -> String {
    "http".into()
}

/// Endpoint description, usually read from a TOML file.
///
/// ```toml
/// id = "llama-2-70b"
/// base_url = "http://localhost:8000"
/// path = "/v1/completions"
/// timeout_secs = 120
/// api_key_env = "COMPLETION_API_KEY"
///
/// [extra]
/// model = "meta-llama/Llama-2-70b-hf"
///
/// [fields]
/// response_text = "/choices/0/text"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    #[serde(default = "default_id")]
    pub id: String,
    pub base_url: String,
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    #[serde(default = "default_key_header")]
    pub api_key_header: String,
    #[serde(default = "default_key_prefix")]
    pub api_key_prefix: String,
    #[serde(default)]
    pub fields: FieldMapping,
    /// Static fields merged into every request body.
    #[serde(default)]
    pub extra: BTreeMap<String, Value>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Optional cap on the number of completions this backend will serve.
    pub max_requests: Option<usize>,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl EndpointConfig {
    pub fn from_toml(text: &str) -> Result<Self, BackendError> {
        toml::from_str(text).map_err(|e| BackendError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        EndpointConfig::from_toml(&text)
    }

    pub fn url(&self) -> String {
        format!(
            "{}/{}",
            self.base_url.trim_end_matches('/'),
            self.path.trim_start_matches('/')
        )
    }
}

struct ApiKey(String);

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(<redacted>)")
    }
}

/// JSON-over-HTTP completion client with retries.
#[derive(Debug)]
pub struct HttpBackend {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    api_key: Option<ApiKey>,
    served: AtomicUsize,
}

enum Attempt {
    Done(String),
    Retry(BackendError),
    Fail(BackendError),
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, BackendError> {
        if config.retry.max_attempts == 0 {
            return Err(BackendError::Config(
                "retry.max_attempts must be at least 1".into(),
            ));
        }
        let api_key = match &config.api_key_env {
            Some(var) => Some(ApiKey(std::env::var(var).map_err(|_| {
                BackendError::Config(format!("environment variable {var} is not set"))
            })?)),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpBackend {
            config,
            client,
            api_key,
            served: AtomicUsize::new(0),
        })
    }

    /// Request body for `request` under the configured field mapping.
    pub fn payload(&self, request: &CompletionRequest) -> Value {
        let mut body: Map<String, Value> = self.config.extra.clone().into_iter().collect();
        let fields = &self.config.fields;
        let mut put = |name: &str, value: Value| {
            if !name.is_empty() {
                body.insert(name.to_string(), value);
            }
        };
        put(&fields.prompt, Value::from(request.prompt.clone()));
        put(&fields.max_tokens, Value::from(request.max_tokens));
        put(&fields.temperature, Value::from(request.temperature));
        put(&fields.stop, Value::from(request.stop.clone()));
        Value::Object(body)
    }

    fn attempt(&self, url: &str, body: &Value, attempts: u32) -> Attempt {
        let mut builder = self
            .client
            .post(url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string());
        for (name, value) in &self.config.headers {
            builder = builder.header(name, value);
        }
        if let Some(key) = &self.api_key {
            builder = builder.header(
                &self.config.api_key_header,
                format!("{}{}", self.config.api_key_prefix, key.0),
            );
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(BackendError::Transport {
                    message: e.to_string(),
                    attempts,
                })
            }
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(BackendError::Transport {
                    message: e.to_string(),
                    attempts,
                })
            }
        };
        if !status.is_success() {
            let error = BackendError::RemoteError {
                status: status.as_u16(),
                body: text.chars().take(200).collect(),
                attempts,
            };
            let transient = status.is_server_error() || matches!(status.as_u16(), 408 | 429);
            return if transient {
                Attempt::Retry(error)
            } else {
                Attempt::Fail(error)
            };
        }
        let parsed: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fail(BackendError::MalformedResponse(e.to_string())),
        };
        match parsed
            .pointer(&self.config.fields.response_text)
            .and_then(Value::as_str)
        {
            Some(s) => Attempt::Done(s.to_string()),
            None => Attempt::Fail(BackendError::MalformedResponse(format!(
                "no string at {}",
                self.config.fields.response_text
            ))),
        }
    }
}

impl CompletionBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        if let Some(limit) = self.config.max_requests {
            if self.served.fetch_add(1, Ordering::SeqCst) >= limit {
                return Err(BackendError::BudgetExceeded { limit });
            }
        }
        let url = self.config.url();
        let body = self.payload(request);
        let started = Instant::now();
        let policy = &self.config.retry;
        let mut attempt = 1;
        loop {
            match self.attempt(&url, &body, attempt) {
                Attempt::Done(text) => {
                    return Ok(CompletionResult {
                        text: request.truncate_at_stop(&text).to_string(),
                        backend_id: self.config.id.clone(),
                        latency: started.elapsed(),
                        attempt_count: attempt,
                    })
                }
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) if attempt >= policy.max_attempts => return Err(e),
                Attempt::Retry(_) => {
                    std::thread::sleep(policy.delay_after(attempt));
                    attempt += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        let delays: Vec<u64> = (1..5).map(|i| p.delay_after(i).as_secs()).collect();
        assert_eq!(delays, [1, 2, 4, 8]);
    }

    #[test]
    fn config_defaults_and_payload_mapping() {
        let cfg = EndpointConfig::from_toml(
            "base_url = \"http://localhost:9/\"\n[fields]\nprompt = \"text\"\nstop = \"\"\n[extra]\nmodel = \"m\"\n",
        )
        .unwrap();
        assert_eq!(cfg.url(), "http://localhost:9/v1/completions");
        assert_eq!(cfg.retry, RetryPolicy::default());
        let backend = HttpBackend::new(cfg).unwrap();
        let body = backend.payload(&CompletionRequest::new("hi"));
        assert_eq!(body["text"], "hi");
        assert_eq!(body["model"], "m");
        assert_eq!(body["max_tokens"], 256);
        assert!(body.get("stop").is_none());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(EndpointConfig::from_toml("base_url = \"x\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn missing_key_variable_names_the_variable() {
        let cfg = EndpointConfig::from_toml(
            "base_url = \"http://x\"\napi_key_env = \"GENDERTX_TEST_UNSET_VAR\"\n",
        )
        .unwrap();
        let err = HttpBackend::new(cfg).unwrap_err().to_string();
        assert!(err.contains("GENDERTX_TEST_UNSET_VAR"));
    }

    #[test]
    fn debug_output_redacts_the_key() {
        let key = ApiKey("sk-secret".into());
        assert!(!format!("{key:?}").contains("sk-secret"));
    }
}
