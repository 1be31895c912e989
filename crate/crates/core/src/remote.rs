//! Chat-completion and embedding clients for remote model endpoints.

use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::RemoteError;

/// Environment variable holding the bearer token for remote endpoints.
pub const API_KEY_ENV: &str = "ATOMKG_API_KEY";

pub const PROPOSITIONER_PROMPT: &str = include_str!("prompts/propositioner.txt");
pub const OPEN_IE_PROMPT: &str = include_str!("prompts/open_ie.txt");
pub const CLOSED_IE_PROMPT: &str = include_str!("prompts/closed_ie.txt");

/// Fills `{name}` placeholders in one pass, so substituted values are never
/// re-scanned for placeholders.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (close, *v))
        }) {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// e.g. `http://localhost:8000/v1`; `/chat/completions` and `/embeddings`
    /// are appended.
    pub base_url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "http://localhost:8000/v1".into(),
            model: "default".into(),
            api_key: None,
            timeout_secs: 60,
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteConfig {
            base_url: base_url.into(),
            model: model.into(),
            ..Default::default()
        }
    }

    /// Picks up the API key from [`API_KEY_ENV`] when not already set.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        }
        self
    }

    fn endpoint(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

/// Blocking JSON-over-HTTP client with exponential backoff.
#[derive(Debug, Clone)]
pub struct HttpModelClient {
    config: RemoteConfig,
    http: reqwest::blocking::Client,
}

impl HttpModelClient {
    pub fn new(config: RemoteConfig) -> Result<Self, RemoteError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        Ok(HttpModelClient { config, http })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, RemoteError> {
        let url = self.config.endpoint(path);
        let attempts = self.config.max_attempts.max(1);
        let mut last = RemoteError::Transport("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1));
                debug!("retrying {url} in {delay} ms (attempt {})", attempt + 1);
                thread::sleep(Duration::from_millis(delay));
            }
            let mut req = self.http.post(&url).json(body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .json::<Value>()
                        .map_err(|e| RemoteError::Protocol(e.to_string()));
                }
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let body = resp.text().unwrap_or_default();
                    warn!("{url} answered {status}");
                    last = RemoteError::Status { status, body };
                }
                Err(e) => {
                    warn!("{url}: {e}");
                    last = RemoteError::Transport(e.to_string());
                }
            }
        }
        Err(last)
    }

    /// One user-message chat completion at temperature 0. Returns the
    /// generated text.
    pub fn complete(&self, prompt: &str) -> Result<String, RemoteError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        let resp = self.post("chat/completions", &body)?;
        completion_text(&resp)
            .map(str::to_owned)
            .ok_or_else(|| RemoteError::Protocol(format!("no generated text in {resp}")))
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, RemoteError> {
        let body = json!({"model": self.config.model, "input": text});
        let resp = self.post("embeddings", &body)?;
        let vector = resp
            .pointer("/data/0/embedding")
            .or_else(|| resp.get("embedding"))
            .and_then(Value::as_array)
            .ok_or_else(|| RemoteError::Protocol(format!("no embedding in {resp}")))?;
        vector
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| RemoteError::Protocol("non-numeric embedding".into())))
            .collect()
    }
}

/// Accepts the OpenAI chat shape, the legacy completion shape, or a bare
/// `{"content": ...}` / `{"text": ...}` body.
fn completion_text(resp: &Value) -> Option<&str> {
    resp.pointer("/choices/0/message/content")
        .or_else(|| resp.pointer("/choices/0/text"))
        .or_else(|| resp.get("content"))
        .or_else(|| resp.get("text"))
        .and_then(Value::as_str)
}

/// Strips a surrounding markdown code fence, if any.
pub(crate) fn strip_fence(raw: &str) -> &str {
    let t = raw.trim();
    if let Some(inner) = t.strip_prefix("```") {
        let inner = inner.trim_start_matches(|c: char| c.is_ascii_alphabetic());
        if let Some(body) = inner.trim_end().strip_suffix("```") {
            return body.trim();
        }
    }
    t
}
