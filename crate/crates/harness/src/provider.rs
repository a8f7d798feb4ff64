//! JSON-over-HTTP client for external cleaner and embedding providers.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use reasoneval_core::kb::{self, CleanError, CleanRequest, Cleaner, CleanerResponse, EmbedError, Embedder, Embedding};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DEFAULT_KEY_ENV: &str = "PROVIDER_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub timeout_ms: u64,
    /// Extra attempts after the first one.
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { timeout_ms: 30_000, retries: 4, backoff_ms: 500, max_backoff_ms: 16_000 }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base · 2^(attempt-1), capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub url: String,
    /// Environment variable holding the bearer token; requests go out
    /// unauthenticated when it is unset.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_rate")]
    pub requests_per_second: f64,
    #[serde(default = "default_burst")]
    pub burst: u32,
    /// Provider cannot take concurrent requests.
    #[serde(default)]
    pub serial_only: bool,
    #[serde(default)]
    pub policy: RetryPolicy,
}

fn default_key_env() -> String {
    DEFAULT_KEY_ENV.to_string()
}

fn default_rate() -> f64 {
    5.0
}

fn default_burst() -> u32 {
    5
}

impl Endpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            api_key_env: default_key_env(),
            requests_per_second: default_rate(),
            burst: default_burst(),
            serial_only: false,
            policy: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("gave up after {attempts} attempts, last failure: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("request timed out after {timeout_ms} ms")]
    Timeout { timeout_ms: u64 },
    #[error("response violates the schema: {0}")]
    Schema(String),
    #[error("provider rejected the request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
}

impl ProviderError {
    /// Whether the caller should skip the item and carry on, as opposed to
    /// aborting the whole run.
    pub fn is_skippable(&self) -> bool {
        matches!(self, ProviderError::Schema(_) | ProviderError::Timeout { .. } | ProviderError::Exhausted { .. })
    }
}

/// Classic token bucket: `burst` tokens, refilled at `rate` per second.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    pub fn new(rate: f64, burst: u32) -> Self {
        let capacity = f64::from(burst.max(1));
        Self { rate: rate.max(1e-6), capacity, tokens: capacity, last: Instant::now() }
    }

    /// Take one token, returning how long the caller must wait first.
    pub fn take(&mut self, now: Instant) -> Duration {
        let elapsed = now.saturating_duration_since(self.last).as_secs_f64();
        self.last = now;
        self.tokens = (self.tokens + elapsed * self.rate).min(self.capacity);
        self.tokens -= 1.0;
        if self.tokens >= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-self.tokens / self.rate)
        }
    }
}

/// A successful call and the number of attempts it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply<T> {
    pub body: T,
    pub attempts: u32,
}

pub struct ProviderClient {
    endpoint: Endpoint,
    agent: ureq::Agent,
    bucket: Mutex<TokenBucket>,
    serial: Mutex<()>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(ProviderError),
}

impl ProviderClient {
    pub fn new(endpoint: Endpoint) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.policy.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let bucket = Mutex::new(TokenBucket::new(endpoint.requests_per_second, endpoint.burst));
        Self { endpoint, agent, bucket, serial: Mutex::new(()) }
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    fn attempt(&self, body: &str) -> Attempt {
        let wait = self.bucket.lock().expect("bucket lock").take(Instant::now());
        if !wait.is_zero() {
            thread::sleep(wait);
        }
        let mut req = self.agent.post(&self.endpoint.url).header("Content-Type", "application/json");
        if let Ok(key) = std::env::var(&self.endpoint.api_key_env) {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return Attempt::Fail(ProviderError::Timeout { timeout_ms: self.endpoint.policy.timeout_ms })
            }
            Err(e @ (ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound)) => {
                return Attempt::Retry(e.to_string())
            }
            Err(e) => return Attempt::Fail(ProviderError::Transport(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => {
                return Attempt::Fail(ProviderError::Timeout { timeout_ms: self.endpoint.policy.timeout_ms })
            }
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        match status {
            200..=299 => Attempt::Done(text),
            429 | 500..=599 => Attempt::Retry(format!("status {status}")),
            _ => Attempt::Fail(ProviderError::Rejected { status, body: text.chars().take(200).collect() }),
        }
    }

    /// POST `payload`, retrying 429, 5xx and dropped connections with
    /// exponential backoff.
    pub fn post_raw(&self, payload: &serde_json::Value) -> Result<Reply<String>, ProviderError> {
        let _guard = self.endpoint.serial_only.then(|| self.serial.lock().expect("serial lock"));
        let body = payload.to_string();
        let max_attempts = self.endpoint.policy.retries + 1;
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                let d = self.endpoint.policy.delay(attempt - 1);
                debug!("retrying {} in {d:?} ({last})", self.endpoint.url);
                thread::sleep(d);
            }
            match self.attempt(&body) {
                Attempt::Done(text) => {
                    debug!("{} answered after {attempt} attempt(s)", self.endpoint.url);
                    return Ok(Reply { body: text, attempts: attempt });
                }
                Attempt::Retry(why) => {
                    warn!("attempt {attempt}/{max_attempts} to {} failed: {why}", self.endpoint.url);
                    last = why;
                }
                Attempt::Fail(e) => return Err(e),
            }
        }
        Err(ProviderError::Exhausted { attempts: max_attempts, last })
    }

    pub fn post<T: DeserializeOwned>(&self, payload: &serde_json::Value) -> Result<Reply<T>, ProviderError> {
        let raw = self.post_raw(payload)?;
        let body = serde_json::from_str(&raw.body).map_err(|e| ProviderError::Schema(e.to_string()))?;
        Ok(Reply { body, attempts: raw.attempts })
    }
}

/// Cleaner backed by a remote model speaking the cleaner wire contract.
pub struct ProviderCleaner {
    pub name: String,
    client: ProviderClient,
}

impl ProviderCleaner {
    pub fn new(name: impl Into<String>, endpoint: Endpoint) -> Self {
        Self { name: name.into(), client: ProviderClient::new(endpoint) }
    }

    pub fn request(&self, req: &CleanRequest) -> Result<Reply<CleanerResponse>, ProviderError> {
        let payload = serde_json::to_value(req).map_err(|e| ProviderError::Transport(e.to_string()))?;
        let reply: Reply<CleanerResponse> = self.client.post(&payload)?;
        reply.body.validate().map_err(ProviderError::Schema)?;
        Ok(reply)
    }
}

impl Cleaner for ProviderCleaner {
    fn tag(&self) -> String {
        self.name.clone()
    }

    fn clean(&self, req: &CleanRequest) -> Result<CleanerResponse, CleanError> {
        self.request(req).map(|r| r.body).map_err(|e| match e {
            ProviderError::Schema(s) => CleanError::Schema(s),
            other => CleanError::Provider(other.to_string()),
        })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbedReply {
    Flat { embedding: Vec<f64> },
    Data { data: Vec<EmbedDatum> },
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f64>,
}

/// Embedder backed by a remote model. Request `{"input": text}`; the reply
/// is either `{"embedding": [...]}` or `{"data": [{"embedding": [...]}]}`.
pub struct ProviderEmbedder {
    pub name: String,
    dim: usize,
    client: ProviderClient,
}

impl ProviderEmbedder {
    pub fn new(name: impl Into<String>, dim: usize, endpoint: Endpoint) -> Self {
        Self { name: name.into(), dim, client: ProviderClient::new(endpoint) }
    }

    pub fn request(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let reply: Reply<EmbedReply> = self.client.post(&serde_json::json!({ "input": text }))?;
        let v = match reply.body {
            EmbedReply::Flat { embedding } => embedding,
            EmbedReply::Data { mut data } if data.len() == 1 => data.remove(0).embedding,
            EmbedReply::Data { data } => return Err(ProviderError::Schema(format!("expected one embedding, got {}", data.len()))),
        };
        if v.len() != self.dim {
            return Err(ProviderError::Schema(format!("expected {} dimensions, got {}", self.dim, v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ProviderError::Schema("non-finite embedding component".into()));
        }
        Ok(v)
    }
}

impl Embedder for ProviderEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn fingerprint(&self) -> String {
        format!("provider-{}-{}", self.name, self.dim)
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        let v = self.request(text).map_err(|e| EmbedError::Provider(e.to_string()))?;
        Ok(kb::normalize(&v))
    }
}
