//! HTTP backend for OpenAI-style chat-completion endpoints.

use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, ChatRequest, ProviderError};

pub struct HttpBackend {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
    id: String,
}

impl HttpBackend {
    /// Resolves the API key from the environment variable named in the
    /// config; fails fast when it is absent so no request is attempted
    /// without credentials.
    pub fn new(endpoint: impl Into<String>, api_key_env: &str) -> Result<Self, ProviderError> {
        let api_key = std::env::var(api_key_env)
            .map_err(|_| ProviderError::MissingApiKey(api_key_env.to_string()))?;
        let endpoint = endpoint.into();
        let id = format!("http:{endpoint}");
        Ok(Self {
            endpoint,
            api_key,
            client: reqwest::blocking::Client::new(),
            id,
        })
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: Option<String>,
}

impl ChatBackend for HttpBackend {
    fn attempt(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let mut messages = Vec::with_capacity(2);
        if !request.system_text.is_empty() {
            messages.push(WireMessage {
                role: "system",
                content: &request.system_text,
            });
        }
        messages.push(WireMessage {
            role: "user",
            content: &request.user_text,
        });
        let body = WireRequest {
            model: &request.model_id,
            messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };

        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::transport(format!("request failed: {e}"), true))?;

        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(BackendError::auth(format!("endpoint returned {status}")));
        }
        if status.as_u16() == 429 {
            return Err(BackendError::rate_limited(format!(
                "endpoint returned {status}"
            )));
        }
        if status.is_server_error() {
            return Err(BackendError::transport(
                format!("endpoint returned {status}"),
                true,
            ));
        }
        if !status.is_success() {
            return Err(BackendError::transport(
                format!("endpoint returned {status}"),
                false,
            ));
        }

        let parsed: WireResponse = response
            .json()
            .map_err(|e| BackendError::transport(format!("malformed response body: {e}"), false))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        Ok(text)
    }

    fn id(&self) -> &str {
        &self.id
    }
}
