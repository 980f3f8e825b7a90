//! Completion backends: a trait the runner drives, deterministic mock
//! oracles for offline runs, and an HTTP client for chat-completion
//! endpoints with retry and audit logging.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a correct response to a request would contain; mock oracles use it
/// to synthesize answers of controlled quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnswerKey {
    /// One-based index of the correct option.
    Choice { answer: usize, n_options: usize },
    /// Canonical variable name to true value.
    Quantities(BTreeMap<String, f64>),
}

/// Per-request randomness anchor plus the answer key. The seed is derived
/// from the run plan and trial coordinates, so a resumed or reordered run
/// draws identical mock answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleHint {
    pub key: AnswerKey,
    pub draw_seed: u64,
}

/// One completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    /// Stable identifier for audit logs, e.g. `item/mode/rate/trial`.
    pub tag: String,
    /// Present when the caller knows the answer (mock runs); real
    /// endpoints ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_hint: Option<OracleHint>,
}

/// Anything that can turn a prompt into a completion.
pub trait Completer: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError>;

    /// How many requests may be in flight at once.
    fn max_parallel(&self) -> usize {
        1
    }
}

/// Behavior of a mock oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OracleKind {
    /// Always answers correctly.
    Perfect,
    /// Choices: uniform over all options. Quantities: each value scaled by
    /// a uniform factor in [0, 2].
    UniformRandom,
    /// Answers correctly with probability `p_correct`, otherwise picks a
    /// wrong option (choices) or doubles the value (quantities).
    Biased { p_correct: f64 },
    /// Replies with prose that contains no parseable answer.
    Silent,
    /// Quantities perturbed by a uniform relative error up to `rel_noise`;
    /// with probability `digit_drop_prob` the value additionally lands a
    /// factor of ten off. Choices answer correctly.
    CalcNoisy { rel_noise: f64, digit_drop_prob: f64 },
}

/// Deterministic stand-in for an endpoint: answers are drawn from the
/// request's oracle hint, never from shared state.
#[derive(Debug, Clone)]
pub struct MockOracle {
    pub kind: OracleKind,
}

impl MockOracle {
    pub fn new(kind: OracleKind) -> MockOracle {
        MockOracle { kind }
    }

    fn answer_choice(&self, answer: usize, n_options: usize, rng: &mut ChaCha8Rng) -> usize {
        match self.kind {
            OracleKind::Perfect | OracleKind::CalcNoisy { .. } => answer,
            OracleKind::UniformRandom => rng.gen_range(1..=n_options),
            OracleKind::Biased { p_correct } => {
                if n_options < 2 || rng.gen_bool(p_correct.clamp(0.0, 1.0)) {
                    answer
                } else {
                    // uniform over the wrong options
                    let mut pick = rng.gen_range(1..n_options);
                    if pick >= answer {
                        pick += 1;
                    }
                    pick
                }
            }
            OracleKind::Silent => unreachable!("silent oracle answers no choice"),
        }
    }

    fn answer_quantity(&self, truth: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self.kind {
            OracleKind::Perfect => truth,
            OracleKind::UniformRandom => truth * rng.gen_range(0.0..=2.0),
            OracleKind::Biased { p_correct } => {
                if rng.gen_bool(p_correct.clamp(0.0, 1.0)) {
                    truth
                } else {
                    truth * 2.0
                }
            }
            OracleKind::CalcNoisy {
                rel_noise,
                digit_drop_prob,
            } => {
                let mut value = truth;
                if rel_noise > 0.0 {
                    value *= 1.0 + rng.gen_range(-rel_noise..=rel_noise);
                }
                if digit_drop_prob > 0.0 && rng.gen_bool(digit_drop_prob.clamp(0.0, 1.0)) {
                    value *= if rng.gen_bool(0.5) { 10.0 } else { 0.1 };
                }
                value
            }
            OracleKind::Silent => unreachable!("silent oracle answers no quantity"),
        }
    }
}

impl Completer for MockOracle {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let hint = request.oracle_hint.as_ref().ok_or_else(|| ClientError::Malformed {
            message: format!("request {} carries no oracle hint", request.tag),
        })?;
        if matches!(self.kind, OracleKind::Silent) {
            return Ok("I cannot determine the answer from the masked text.".to_string());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hint.draw_seed);
        match &hint.key {
            AnswerKey::Choice { answer, n_options } => {
                let picked = self.answer_choice(*answer, *n_options, &mut rng);
                Ok(format!(
                    "{{\"basis\": \"mock oracle\", \"answer\": {picked}}}"
                ))
            }
            AnswerKey::Quantities(truths) => {
                let answers: BTreeMap<&str, f64> = truths
                    .iter()
                    .map(|(name, truth)| (name.as_str(), self.answer_quantity(*truth, &mut rng)))
                    .collect();
                serde_json::to_string(&answers).map_err(|e| ClientError::Malformed {
                    message: e.to_string(),
                })
            }
        }
    }

    fn max_parallel(&self) -> usize {
        4
    }
}

fn default_temperature() -> f64 {
    0.0
}
fn default_timeout_secs() -> u64 {
    60
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_parallel() -> usize {
    1
}

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended unless the URL already
    /// ends in `/completions`.
    pub base_url: String,
    pub model: String,
    /// Literal key; takes precedence over `api_key_env`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    /// Environment variable to read the key from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    /// Append one JSON line per attempt here when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_log: Option<PathBuf>,
}

impl EndpointConfig {
    pub fn from_toml_path(path: &Path) -> Result<EndpointConfig, ClientError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| ClientError::Config {
            message: format!("{}: {e}", path.display()),
        })
    }

    pub fn resolve_api_key(&self) -> Option<String> {
        if self.api_key.is_some() {
            return self.api_key.clone();
        }
        self.api_key_env
            .as_ref()
            .and_then(|name| std::env::var(name).ok())
    }

    fn completions_url(&self) -> String {
        let trimmed = self.base_url.trim_end_matches('/');
        if trimmed.ends_with("/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        }
    }
}

/// Blocking HTTP completer for OpenAI-style chat endpoints. Transport
/// failures, 429 and 5xx responses are retried with exponential backoff;
/// authentication failures abort immediately.
pub struct HttpClient {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    audit: Option<Mutex<File>>,
}

impl HttpClient {
    pub fn new(config: EndpointConfig) -> Result<HttpClient, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ClientError::Config {
                message: e.to_string(),
            })?;
        let audit = match &config.audit_log {
            Some(path) => {
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent)?;
                    }
                }
                Some(Mutex::new(
                    OpenOptions::new().create(true).append(true).open(path)?,
                ))
            }
            None => None,
        };
        Ok(HttpClient {
            config,
            client,
            audit,
        })
    }

    fn audit_line(&self, tag: &str, attempt: u32, status: Option<u16>, note: &str) {
        let Some(audit) = &self.audit else { return };
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let line = serde_json::json!({
            "ts": ts,
            "tag": tag,
            "attempt": attempt,
            "status": status,
            "note": note,
        });
        if let Ok(mut file) = audit.lock() {
            let _ = writeln!(file, "{line}");
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .config
            .retry_backoff_ms
            .saturating_mul(1u64 << attempt.min(4));
        Duration::from_millis(ms.min(8_000))
    }

    fn parse_content(body: &str) -> Result<String, ClientError> {
        let value: serde_json::Value =
            serde_json::from_str(body).map_err(|e| ClientError::Malformed {
                message: format!("response is not JSON: {e}"),
            })?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| ClientError::Malformed {
                message: "response carries no /choices/0/message/content".to_string(),
            })?;
        Ok(content.to_string())
    }
}

impl Completer for HttpClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let mut body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.config.temperature,
        });
        if let Some(max_tokens) = self.config.max_tokens {
            body["max_tokens"] = serde_json::json!(max_tokens);
        }
        let url = self.config.completions_url();
        let key = self.config.resolve_api_key();

        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            let mut builder = self.client.post(&url).json(&body);
            if let Some(key) = &key {
                builder = builder.bearer_auth(key);
            }
            let response = match builder.send() {
                Ok(response) => response,
                Err(e) => {
                    last_error = e.to_string();
                    self.audit_line(&request.tag, attempt, None, &last_error);
                    continue;
                }
            };
            let status = response.status();
            let text = response.text().unwrap_or_default();
            if status.is_success() {
                self.audit_line(&request.tag, attempt, Some(status.as_u16()), "ok");
                return Self::parse_content(&text);
            }
            self.audit_line(&request.tag, attempt, Some(status.as_u16()), "http error");
            match status.as_u16() {
                401 | 403 | 407 => {
                    return Err(ClientError::Auth {
                        status: status.as_u16(),
                    })
                }
                429 | 500..=599 => {
                    last_error = format!("status {status}");
                    continue;
                }
                other => {
                    return Err(ClientError::Rejected {
                        status: other,
                        body: truncate(&text, 200),
                    })
                }
            }
        }
        Err(ClientError::Transport {
            message: last_error,
            attempts: self.config.max_retries + 1,
        })
    }

    fn max_parallel(&self) -> usize {
        self.config.parallel.max(1)
    }
}

fn truncate(s: &str, limit: usize) -> String {
    if s.len() <= limit {
        s.to_string()
    } else {
        let mut end = limit;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    }
}

/// Pull every balanced `{...}` block out of free text and parse the ones
/// that are valid JSON objects, retrying each block with single quotes
/// rewritten to double quotes. Code fences and surrounding prose are
/// ignored by construction.
pub fn extract_json_objects(text: &str) -> Vec<serde_json::Value> {
    let bytes = text.as_bytes();
    let mut objects = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        if bytes[i] != b'{' {
            i += 1;
            continue;
        }
        if let Some(end) = balanced_end(text, i) {
            let candidate = &text[i..end];
            if let Ok(value) = serde_json::from_str::<serde_json::Value>(candidate) {
                if value.is_object() {
                    objects.push(value);
                    i = end;
                    continue;
                }
            }
            let requoted = candidate.replace('\'', "\"");
            if let Ok(value) = serde_json::from_str::<serde_json::Value>(&requoted) {
                if value.is_object() {
                    objects.push(value);
                    i = end;
                    continue;
                }
            }
        }
        i += 1;
    }
    objects
}

/// Byte index one past the brace that closes the block opened at `start`,
/// skipping string literals in either quote style.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut quote: Option<u8> = None;
    let mut i = start;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) => match b {
                b'\\' => i += 1,
                _ if b == q => quote = None,
                _ => {}
            },
            None => match b {
                b'"' | b'\'' => quote = Some(b),
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(i + 1);
                    }
                }
                _ => {}
            },
        }
        i += 1;
    }
    None
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport failure: {message} (after {attempts} attempts)")]
    Transport { message: String, attempts: u32 },
    #[error("authentication rejected with status {status}")]
    Auth { status: u16 },
    #[error("endpoint rejected the request: status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed completion: {message}")]
    Malformed { message: String },
    #[error("config: {message}")]
    Config { message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
