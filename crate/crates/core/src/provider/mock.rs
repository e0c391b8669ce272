//! Deterministic scripted mock backend.
//!
//! The mock is exhaustive: a request whose user text has no script entry is
//! an error, never a silent default. Instrumentation counters expose the
//! upstream call count and the in-flight watermark so tests can assert the
//! cache and concurrency contracts.

use std::collections::HashMap;
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::{BackendError, ChatBackend, ChatRequest};

/// A scripted reply: either canned text or a scripted failure.
#[derive(Debug, Clone)]
pub enum ScriptEntry {
    Text(String),
    Fail { message: String, retryable: bool },
}

type ResponderFn = dyn Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync;

enum Script {
    /// Exact match on `user_text`.
    Table(HashMap<String, ScriptEntry>),
    /// Arbitrary responder; still expected to be exhaustive.
    Responder(Box<ResponderFn>),
}

pub struct MockBackend {
    script: Script,
    delay: Option<Duration>,
    calls: Arc<AtomicU64>,
    in_flight: Arc<AtomicI64>,
    max_in_flight: Arc<AtomicU64>,
}

impl MockBackend {
    /// Script keyed by exact `user_text`, all replies plain text.
    pub fn with_table(table: HashMap<String, String>) -> Self {
        let table = table
            .into_iter()
            .map(|(k, v)| (k, ScriptEntry::Text(v)))
            .collect();
        Self::with_entries(table)
    }

    pub fn with_entries(table: HashMap<String, ScriptEntry>) -> Self {
        Self::from_script(Script::Table(table))
    }

    /// Respond by function. The function should return an error for any
    /// request it does not recognize so the mock stays exhaustive.
    pub fn from_fn<F>(responder: F) -> Self
    where
        F: Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync + 'static,
    {
        Self::from_script(Script::Responder(Box::new(responder)))
    }

    fn from_script(script: Script) -> Self {
        Self {
            script,
            delay: None,
            calls: Arc::new(AtomicU64::new(0)),
            in_flight: Arc::new(AtomicI64::new(0)),
            max_in_flight: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Hold each call open for `delay` so concurrency tests can overlap them.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    /// Shared counter of upstream calls that reached the backend.
    pub fn call_counter(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.calls)
    }

    /// Shared high-water mark of simultaneously in-flight calls.
    pub fn max_in_flight_counter(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.max_in_flight)
    }

    fn resolve(&self, request: &ChatRequest) -> Result<String, BackendError> {
        match &self.script {
            Script::Table(table) => match table.get(&request.user_text) {
                Some(ScriptEntry::Text(text)) => Ok(text.clone()),
                Some(ScriptEntry::Fail { message, retryable }) => {
                    Err(BackendError::transport(message.clone(), *retryable))
                }
                None => Err(BackendError::unscripted(format!(
                    "no scripted response for user_text {:?}",
                    preview(&request.user_text)
                ))),
            },
            Script::Responder(f) => f(request),
        }
    }
}

impl ChatBackend for MockBackend {
    fn attempt(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight
            .fetch_max(now.max(0) as u64, Ordering::SeqCst);
        if let Some(delay) = self.delay {
            std::thread::sleep(delay);
        }
        let result = self.resolve(request);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        result
    }

    fn id(&self) -> &str {
        "mock"
    }
}

fn preview(text: &str) -> String {
    text.chars().take(80).collect()
}
