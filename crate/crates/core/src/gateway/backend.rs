use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::mock::{MockBackend, MockOptions};
use crate::voting::VotingRule;

pub const OPENAI_KEY_VAR: &str = "CIVIC_OPENAI_KEY";
pub const ANTHROPIC_KEY_VAR: &str = "CIVIC_ANTHROPIC_KEY";

const OPENAI_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
const ANTHROPIC_ENDPOINT: &str = "https://api.anthropic.com/v1/messages";
const ANTHROPIC_VERSION: &str = "2023-06-01";
const MAX_BACKOFF: Duration = Duration::from_secs(30);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendKind {
    #[serde(rename = "mock")]
    Mock,
    /// OpenAI-compatible chat completions.
    #[serde(rename = "openai", alias = "http_chat")]
    OpenAi,
    #[serde(rename = "anthropic")]
    Anthropic,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendKind::Mock),
            "openai" | "http_chat" | "http-chat" => Ok(BackendKind::OpenAi),
            "anthropic" => Ok(BackendKind::Anthropic),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Empty selects the kind's default model.
    pub model_name: String,
    pub temperature: f64,
    pub endpoint: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_tokens: u32,
    pub seed: u64,
    pub mock: MockOptions,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            model_name: String::new(),
            temperature: 0.0,
            endpoint: None,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_ms: 500,
            max_tokens: 2048,
            seed: 0,
            mock: MockOptions::default(),
        }
    }
}

impl BackendConfig {
    pub fn model(&self) -> String {
        if !self.model_name.is_empty() {
            return self.model_name.clone();
        }
        match self.kind {
            BackendKind::Mock => "mock-voter".into(),
            BackendKind::OpenAi => "gpt-4o".into(),
            BackendKind::Anthropic => "claude-3-5-sonnet-20241022".into(),
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy { max_retries: self.max_retries, base_backoff: Duration::from_millis(self.backoff_ms) }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(BackendError::Config(format!("temperature {} must be >= 0", self.temperature)));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(BackendError::Config(format!("timeout {} must be positive", self.timeout_secs)));
        }
        if !(0.0..=1.0).contains(&self.mock.fault_rate) {
            return Err(BackendError::Config(format!("mock fault_rate {} outside [0, 1]", self.mock.fault_rate)));
        }
        Ok(())
    }

    /// Instantiates the backend; API keys come from the environment.
    pub fn build(&self) -> Result<Box<dyn ChatBackend>, BackendError> {
        self.validate()?;
        let timeout = Duration::from_secs_f64(self.timeout_secs);
        match self.kind {
            BackendKind::Mock => Ok(Box::new(MockBackend::new(self.seed, self.mock.clone()).with_model(self.model()))),
            BackendKind::OpenAi => {
                let key = api_key(OPENAI_KEY_VAR)?;
                let endpoint = self.endpoint.clone().unwrap_or_else(|| OPENAI_ENDPOINT.into());
                Ok(Box::new(OpenAiBackend::new(self.model(), endpoint, key, timeout)?))
            }
            BackendKind::Anthropic => {
                let key = api_key(ANTHROPIC_KEY_VAR)?;
                let endpoint = self.endpoint.clone().unwrap_or_else(|| ANTHROPIC_ENDPOINT.into());
                Ok(Box::new(AnthropicBackend::new(self.model(), endpoint, key, timeout, self.max_tokens)?))
            }
        }
    }
}

fn api_key(var: &str) -> Result<String, BackendError> {
    match std::env::var(var) {
        Ok(k) if !k.trim().is_empty() => Ok(k.trim().to_string()),
        _ => Err(BackendError::Auth(format!("environment variable {var} is not set"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited")]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
    #[error("unexpected response body: {0}")]
    Decode(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Timeout | BackendError::RateLimited { .. } | BackendError::Transport(_) => true,
            BackendError::Status { code, .. } => *code == 408 || *code >= 500,
            _ => false,
        }
    }

    /// Errors that no amount of retrying or re-prompting will fix.
    pub fn is_fatal(&self) -> bool {
        match self {
            BackendError::Auth(_) | BackendError::Config(_) => true,
            BackendError::Status { code, .. } => matches!(code, 400 | 401 | 403 | 404),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub agent_id: u32,
    pub community: String,
    pub round: u32,
    pub rule: VotingRule,
    /// 0 for the first ask, incremented on each corrective re-ask.
    pub attempt: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

pub trait ChatBackend: Send + Sync {
    fn model_name(&self) -> &str;

    /// Deterministic backends get no wall-clock data in their transcripts.
    fn is_deterministic(&self) -> bool {
        false
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff: Duration,
}

impl RetryPolicy {
    pub fn backoff(&self, retry: u32) -> Duration {
        self.base_backoff.saturating_mul(1u32 << retry.min(16)).min(MAX_BACKOFF)
    }
}

/// What happened on one backend call, for the transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub model: String,
    pub started_unix_ms: Option<u64>,
    pub elapsed_ms: Option<u64>,
    pub retries: u32,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub error: Option<String>,
}

/// Sends one request, retrying transient failures with exponential backoff.
pub fn query_agent(
    backend: &dyn ChatBackend,
    retry: &RetryPolicy,
    request: &ChatRequest,
) -> (Result<ChatResponse, BackendError>, QueryRecord) {
    let timed = !backend.is_deterministic();
    let started_unix_ms = timed.then(|| {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    });
    let clock = Instant::now();
    let mut retries = 0;
    let result = loop {
        match backend.complete(request) {
            Err(e) if e.is_retryable() && retries < retry.max_retries => {
                let mut wait = retry.backoff(retries);
                if let BackendError::RateLimited { retry_after_secs: Some(s) } = e {
                    wait = wait.max(Duration::from_secs(s).min(MAX_BACKOFF));
                }
                std::thread::sleep(wait);
                retries += 1;
            }
            other => break other,
        }
    };
    let record = QueryRecord {
        model: backend.model_name().to_string(),
        started_unix_ms,
        elapsed_ms: timed.then(|| clock.elapsed().as_millis() as u64),
        retries,
        prompt_tokens: result.as_ref().ok().and_then(|r| r.prompt_tokens),
        completion_tokens: result.as_ref().ok().and_then(|r| r.completion_tokens),
        error: result.as_ref().err().map(ToString::to_string),
    };
    (result, record)
}

fn http_client(timeout: Duration) -> Result<reqwest::blocking::Client, BackendError> {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| BackendError::Config(e.to_string()))
}

fn post_json(
    request: reqwest::blocking::RequestBuilder,
    body: &Value,
) -> Result<Value, BackendError> {
    let resp = request.json(body).send().map_err(|e| {
        if e.is_timeout() {
            BackendError::Timeout
        } else {
            BackendError::Transport(e.to_string())
        }
    })?;
    let status = resp.status();
    if status.as_u16() == 429 {
        let retry_after_secs = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse().ok());
        return Err(BackendError::RateLimited { retry_after_secs });
    }
    let text = resp.text().map_err(|e| {
        if e.is_timeout() {
            BackendError::Timeout
        } else {
            BackendError::Transport(e.to_string())
        }
    })?;
    if !status.is_success() {
        let body: String = text.chars().take(500).collect();
        let code = status.as_u16();
        return Err(if code == 401 || code == 403 {
            BackendError::Auth(body)
        } else {
            BackendError::Status { code, body }
        });
    }
    serde_json::from_str(&text).map_err(|e| BackendError::Decode(e.to_string()))
}

fn token(v: &Value, key: &str) -> Option<u64> {
    v.get(key).and_then(Value::as_u64)
}

pub struct OpenAiBackend {
    model: String,
    endpoint: String,
    key: String,
    client: reqwest::blocking::Client,
}

impl OpenAiBackend {
    pub fn new(model: String, endpoint: String, key: String, timeout: Duration) -> Result<OpenAiBackend, BackendError> {
        Ok(OpenAiBackend { model, endpoint, key, client: http_client(timeout)? })
    }
}

impl ChatBackend for OpenAiBackend {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let body = json!({
            "model": self.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let v = post_json(self.client.post(&self.endpoint).bearer_auth(&self.key), &body)?;
        let text = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Decode("missing choices[0].message.content".into()))?;
        let usage = v.get("usage").cloned().unwrap_or(Value::Null);
        Ok(ChatResponse {
            text: text.to_string(),
            prompt_tokens: token(&usage, "prompt_tokens"),
            completion_tokens: token(&usage, "completion_tokens"),
        })
    }
}

pub struct AnthropicBackend {
    model: String,
    endpoint: String,
    key: String,
    max_tokens: u32,
    client: reqwest::blocking::Client,
}

impl AnthropicBackend {
    pub fn new(
        model: String,
        endpoint: String,
        key: String,
        timeout: Duration,
        max_tokens: u32,
    ) -> Result<AnthropicBackend, BackendError> {
        Ok(AnthropicBackend { model, endpoint, key, max_tokens, client: http_client(timeout)? })
    }
}

impl ChatBackend for AnthropicBackend {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let body = json!({
            "model": self.model,
            "max_tokens": self.max_tokens,
            "temperature": request.temperature,
            "system": request.system,
            "messages": [{"role": "user", "content": request.user}],
        });
        let req = self
            .client
            .post(&self.endpoint)
            .header("x-api-key", &self.key)
            .header("anthropic-version", ANTHROPIC_VERSION);
        let v = post_json(req, &body)?;
        let text: String = v
            .get("content")
            .and_then(Value::as_array)
            .map(|blocks| blocks.iter().filter_map(|b| b.get("text").and_then(Value::as_str)).collect())
            .ok_or_else(|| BackendError::Decode("missing content blocks".into()))?;
        let usage = v.get("usage").cloned().unwrap_or(Value::Null);
        Ok(ChatResponse {
            text,
            prompt_tokens: token(&usage, "input_tokens"),
            completion_tokens: token(&usage, "output_tokens"),
        })
    }
}
