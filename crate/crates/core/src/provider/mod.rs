//! Chat-completion provider abstraction.
//!
//! A [`Provider`] wraps a backend (HTTP endpoint or scripted mock) with
//! retries, a content-addressed response cache, and a bounded-concurrency
//! gate. All pipeline prompts are single-turn: one optional system text and
//! one user text.

mod cache;
mod http;
mod mock;

pub use cache::ResponseCache;
pub use http::HttpBackend;
pub use mock::{MockBackend, ScriptEntry};

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default environment variable holding the API key for HTTP backends.
pub const DEFAULT_API_KEY_ENV: &str = "CONSTRAINT_FORGE_API_KEY";

/// A single-turn chat completion request.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(
        system_text: impl Into<String>,
        user_text: impl Into<String>,
        model_id: impl Into<String>,
        temperature: f64,
        max_tokens: u32,
    ) -> Result<Self, ProviderError> {
        let req = Self {
            system_text: system_text.into(),
            user_text: user_text.into(),
            model_id: model_id.into(),
            temperature,
            max_tokens,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.user_text.is_empty() {
            return Err(ProviderError::InvalidRequest("user_text is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) || !self.temperature.is_finite() {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(ProviderError::InvalidRequest("max_tokens is zero".into()));
        }
        Ok(())
    }
}

/// A completed chat response.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub provider_id: String,
    /// True when the response was served from the on-disk cache.
    pub cached: bool,
}

/// Provider settings shared by all backends.
#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub api_key_env: String,
    pub max_concurrency: usize,
    pub max_retries: u32,
    /// Base backoff delay; attempt i sleeps `base * 2^(i-1)` plus jitter.
    pub retry_base_ms: u64,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            max_concurrency: 4,
            max_retries: 3,
            retry_base_ms: 250,
            cache_dir: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_concurrency == 0 {
            return Err(ProviderError::InvalidRequest(
                "max_concurrency must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no scripted response for request: {0:?}")]
    NoScriptedResponse(String),
    #[error("authentication failure: {0}")]
    Auth(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("rate limited after {attempts} attempt(s): {message}")]
    RateLimited { attempts: u32, message: String },
    #[error("backend returned an empty completion")]
    EmptyCompletion,
    #[error("missing API key: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("response cache error: {0}")]
    Cache(String),
}

/// Classifies a single backend attempt so the retry loop knows what to do.
#[derive(Debug, Clone)]
pub struct BackendError {
    pub kind: BackendErrorKind,
    pub retryable: bool,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendErrorKind {
    Transport,
    RateLimited,
    Auth,
    Unscripted,
}

impl BackendError {
    pub fn transport(message: impl Into<String>, retryable: bool) -> Self {
        Self {
            kind: BackendErrorKind::Transport,
            retryable,
            message: message.into(),
        }
    }

    pub fn rate_limited(message: impl Into<String>) -> Self {
        Self {
            kind: BackendErrorKind::RateLimited,
            retryable: true,
            message: message.into(),
        }
    }

    pub fn auth(message: impl Into<String>) -> Self {
        Self {
            kind: BackendErrorKind::Auth,
            retryable: false,
            message: message.into(),
        }
    }

    pub fn unscripted(message: impl Into<String>) -> Self {
        Self {
            kind: BackendErrorKind::Unscripted,
            retryable: false,
            message: message.into(),
        }
    }
}

/// One attempt against a concrete backend. Retries, caching, and concurrency
/// limits live in [`Provider`], not here.
pub trait ChatBackend: Send + Sync {
    fn attempt(&self, request: &ChatRequest) -> Result<String, BackendError>;

    /// Identifier recorded in [`ChatResponse::provider_id`].
    fn id(&self) -> &str;
}

/// Stable digest over (model_id, system_text, user_text, temperature,
/// max_tokens). Fields are length-prefixed so concatenations cannot collide,
/// and text is hashed byte-exact with no normalization.
pub fn cache_key(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    for field in [&request.model_id, &request.system_text, &request.user_text] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hasher.update(request.temperature.to_bits().to_le_bytes());
    hasher.update(u64::from(request.max_tokens).to_le_bytes());
    hex::encode(hasher.finalize())
}

/// Counting semaphore bounding in-flight upstream calls.
struct Gate {
    max: usize,
    in_use: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(max: usize) -> Self {
        Self {
            max,
            in_use: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut in_use = self.in_use.lock().unwrap();
        while *in_use >= self.max {
            in_use = self.freed.wait(in_use).unwrap();
        }
        *in_use += 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut in_use = self.gate.in_use.lock().unwrap();
        *in_use -= 1;
        self.gate.freed.notify_one();
    }
}

/// Resilient chat-completion client: cache lookup, bounded concurrency,
/// exponential backoff with jitter.
pub struct Provider {
    backend: Box<dyn ChatBackend>,
    cache: Option<ResponseCache>,
    gate: Gate,
    max_retries: u32,
    retry_base_ms: u64,
}

impl Provider {
    pub fn new(
        backend: Box<dyn ChatBackend>,
        config: &ProviderConfig,
    ) -> Result<Self, ProviderError> {
        config.validate()?;
        let cache = match &config.cache_dir {
            Some(dir) => Some(ResponseCache::open(dir)?),
            None => None,
        };
        Ok(Self {
            backend,
            cache,
            gate: Gate::new(config.max_concurrency),
            max_retries: config.max_retries,
            retry_base_ms: config.retry_base_ms,
        })
    }

    /// Mock provider with no cache and the given concurrency bound.
    pub fn mock(backend: MockBackend) -> Self {
        Self {
            backend: Box::new(backend),
            cache: None,
            gate: Gate::new(4),
            max_retries: 0,
            retry_base_ms: 0,
        }
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.complete_inner(request, true)
    }

    /// Bypasses the cache lookup (the fresh response is still stored). Used
    /// for reprompts where replaying a cached response would be pointless.
    pub fn complete_uncached(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.complete_inner(request, false)
    }

    fn complete_inner(
        &self,
        request: &ChatRequest,
        read_cache: bool,
    ) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        let key = cache_key(request);
        if read_cache {
            if let Some(cache) = &self.cache {
                if let Some(text) = cache.get(&key) {
                    return Ok(ChatResponse {
                        text,
                        provider_id: self.backend.id().to_string(),
                        cached: true,
                    });
                }
            }
        }

        let _permit = self.gate.acquire();
        let text = self.attempt_with_retries(request)?;
        if text.is_empty() {
            return Err(ProviderError::EmptyCompletion);
        }
        if let Some(cache) = &self.cache {
            cache.put(&key, &text)?;
        }
        Ok(ChatResponse {
            text,
            provider_id: self.backend.id().to_string(),
            cached: false,
        })
    }

    fn attempt_with_retries(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let max_attempts = self.max_retries.saturating_add(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.backend.attempt(request) {
                Ok(text) => return Ok(text),
                Err(err) if err.retryable && attempt < max_attempts => {
                    let backoff = self.backoff_delay(attempt);
                    log::debug!(
                        "attempt {attempt}/{max_attempts} failed ({}), retrying in {backoff:?}",
                        err.message
                    );
                    std::thread::sleep(backoff);
                }
                Err(err) => return Err(Self::exhausted(err, attempt, request)),
            }
        }
    }

    fn backoff_delay(&self, attempt: u32) -> Duration {
        let base = self.retry_base_ms;
        if base == 0 {
            return Duration::ZERO;
        }
        let exp = base.saturating_mul(1_u64 << (attempt - 1).min(16));
        let jitter = rand::random::<u64>() % base;
        Duration::from_millis(exp.saturating_add(jitter))
    }

    fn exhausted(err: BackendError, attempts: u32, request: &ChatRequest) -> ProviderError {
        match err.kind {
            BackendErrorKind::Auth => ProviderError::Auth(err.message),
            BackendErrorKind::Unscripted => {
                let preview: String = request.user_text.chars().take(80).collect();
                ProviderError::NoScriptedResponse(preview)
            }
            BackendErrorKind::RateLimited => ProviderError::RateLimited {
                attempts,
                message: err.message,
            },
            BackendErrorKind::Transport => ProviderError::Transport {
                attempts,
                message: err.message,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Arc;

    fn request(user_text: &str) -> ChatRequest {
        ChatRequest::new("", user_text, "test-model", 0.0, 64).unwrap()
    }

    #[test]
    fn scripted_mock_returns_table_entry() {
        let mock = MockBackend::with_table(HashMap::from([("P1".to_string(), "R1".to_string())]));
        let provider = Provider::mock(mock);
        let resp = provider.complete(&request("P1")).unwrap();
        assert_eq!(resp.text, "R1");
        assert!(!resp.cached);
    }

    #[test]
    fn empty_table_is_an_error() {
        let provider = Provider::mock(MockBackend::with_table(HashMap::new()));
        let err = provider.complete(&request("anything")).unwrap_err();
        assert!(matches!(err, ProviderError::NoScriptedResponse(_)));
    }

    #[test]
    fn cache_hit_skips_upstream_call() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockBackend::with_table(HashMap::from([("P1".to_string(), "R1".to_string())]));
        let calls = mock.call_counter();
        let config = ProviderConfig {
            cache_dir: Some(dir.path().to_path_buf()),
            ..ProviderConfig::default()
        };
        let provider = Provider::new(Box::new(mock), &config).unwrap();

        let first = provider.complete(&request("P1")).unwrap();
        let second = provider.complete(&request("P1")).unwrap();
        assert!(!first.cached);
        assert!(second.cached);
        assert_eq!(second.text, "R1");
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn upstream_calls_bounded_by_distinct_keys() {
        let dir = tempfile::tempdir().unwrap();
        let table: HashMap<String, String> =
            (0..4).map(|i| (format!("p{i}"), format!("r{i}"))).collect();
        let mock = MockBackend::with_table(table);
        let calls = mock.call_counter();
        let config = ProviderConfig {
            cache_dir: Some(dir.path().to_path_buf()),
            ..ProviderConfig::default()
        };
        let provider = Provider::new(Box::new(mock), &config).unwrap();

        for _ in 0..3 {
            for i in 0..4 {
                provider.complete(&request(&format!("p{i}"))).unwrap();
            }
        }
        assert_eq!(calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn cache_key_is_deterministic_and_field_sensitive() {
        let a = request("hello");
        let b = request("hello");
        assert_eq!(cache_key(&a), cache_key(&b));

        let mut warmer = request("hello");
        warmer.temperature = 0.7;
        assert_ne!(cache_key(&a), cache_key(&warmer));

        // Byte-exact hashing: whitespace differences count.
        let spaced = request("hello ");
        assert_ne!(cache_key(&a), cache_key(&spaced));

        let other_model = ChatRequest::new("", "hello", "other-model", 0.0, 64).unwrap();
        assert_ne!(cache_key(&a), cache_key(&other_model));
    }

    #[test]
    fn request_validation_rejects_bad_fields() {
        assert!(ChatRequest::new("", "", "m", 0.0, 64).is_err());
        assert!(ChatRequest::new("", "x", "m", 2.5, 64).is_err());
        assert!(ChatRequest::new("", "x", "m", 0.0, 0).is_err());
    }

    struct FlakyBackend {
        fail_first: u32,
        attempts: AtomicU32,
    }

    impl ChatBackend for FlakyBackend {
        fn attempt(&self, _request: &ChatRequest) -> Result<String, BackendError> {
            let n = self.attempts.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err(BackendError::transport("connection reset", true))
            } else {
                Ok("recovered".to_string())
            }
        }

        fn id(&self) -> &str {
            "flaky"
        }
    }

    #[test]
    fn retries_recover_from_transient_failures() {
        let backend = FlakyBackend {
            fail_first: 2,
            attempts: AtomicU32::new(0),
        };
        let config = ProviderConfig {
            max_retries: 3,
            retry_base_ms: 0,
            ..ProviderConfig::default()
        };
        let provider = Provider::new(Box::new(backend), &config).unwrap();
        let resp = provider.complete(&request("q")).unwrap();
        assert_eq!(resp.text, "recovered");
    }

    #[test]
    fn retries_exhaust_into_transport_error() {
        let backend = FlakyBackend {
            fail_first: 10,
            attempts: AtomicU32::new(0),
        };
        let config = ProviderConfig {
            max_retries: 2,
            retry_base_ms: 0,
            ..ProviderConfig::default()
        };
        let provider = Provider::new(Box::new(backend), &config).unwrap();
        match provider.complete(&request("q")).unwrap_err() {
            ProviderError::Transport { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("expected transport error, got {other:?}"),
        }
    }

    #[test]
    fn gate_bounds_in_flight_requests() {
        let mock = MockBackend::with_table(HashMap::from([("p".to_string(), "r".to_string())]))
            .with_delay(Duration::from_millis(20));
        let watermark = mock.max_in_flight_counter();
        let config = ProviderConfig {
            max_concurrency: 2,
            ..ProviderConfig::default()
        };
        let provider = Arc::new(Provider::new(Box::new(mock), &config).unwrap());

        std::thread::scope(|scope| {
            for _ in 0..8 {
                let provider = Arc::clone(&provider);
                scope.spawn(move || provider.complete(&request("p")).unwrap());
            }
        });
        assert!(watermark.load(Ordering::SeqCst) <= 2);
    }
}
