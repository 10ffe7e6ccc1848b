// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimal chat-completion HTTP client shared by the remote gateway and the
//! judge transport. Wire format is the ubiquitous `/chat/completions` JSON
//! shape; authentication is a bearer token.

use serde::Deserialize;
use serde_json::json;

/// One outbound chat call.
#[derive(Debug, Clone)]
pub struct ChatCall {
    pub model: String,
    pub system: Option<String>,
    /// (role, content) pairs appended after the system message.
    pub messages: Vec<(String, String)>,
    pub temperature: f32,
    pub max_tokens: Option<usize>,
    pub seed: Option<u64>,
}

/// Response text plus the token count when the server reports one.
#[derive(Debug, Clone)]
pub struct ChatReply {
    pub text: String,
    pub completion_tokens: Option<usize>,
}

/// Transport-level failure; `retryable` drives the caller's backoff loop.
#[derive(Debug, Clone)]
pub struct TransportError {
    pub retryable: bool,
    pub message: String,
}

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    completion_tokens: Option<usize>,
}

/// Blocking HTTP client for a chat-completion endpoint.
pub struct HttpChatClient {
    base_url: String,
    api_key: String,
    client: reqwest::blocking::Client,
    debug: bool,
}

impl HttpChatClient {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpChatClient {
            base_url: base_url.into(),
            api_key: api_key.into(),
            client: reqwest::blocking::Client::new(),
            debug: false,
        }
    }

    /// Log request/response bodies (bearer token redacted).
    pub fn with_debug(mut self, debug: bool) -> Self {
        self.debug = debug;
        self
    }

    pub fn chat(&self, call: &ChatCall) -> Result<ChatReply, TransportError> {
        let mut messages = Vec::new();
        if let Some(system) = &call.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        for (role, content) in &call.messages {
            messages.push(json!({"role": role, "content": content}));
        }
        let mut body = json!({
            "model": call.model,
            "messages": messages,
            "temperature": call.temperature,
        });
        if let Some(max) = call.max_tokens {
            body["max_tokens"] = json!(max);
        }
        if let Some(seed) = call.seed {
            body["seed"] = json!(seed);
        }
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        if self.debug {
            log::debug!("judge request to {url}: {body}");
        }
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| TransportError {
                retryable: true,
                message: format!("transport error: {e}"),
            })?;
        let status = response.status();
        let text = response.text().map_err(|e| TransportError {
            retryable: true,
            message: format!("failed reading response body: {e}"),
        })?;
        if self.debug {
            log::debug!("judge response {status}: {text}");
        }
        if !status.is_success() {
            return Err(TransportError {
                retryable: status.is_server_error() || status.as_u16() == 429,
                message: format!("HTTP {status}: {text}"),
            });
        }
        let wire: WireResponse = serde_json::from_str(&text).map_err(|e| TransportError {
            retryable: false,
            message: format!("malformed response body: {e}"),
        })?;
        let choice = wire.choices.into_iter().next().ok_or(TransportError {
            retryable: false,
            message: "response contained no choices".into(),
        })?;
        Ok(ChatReply {
            text: choice.message.content,
            completion_tokens: wire.usage.and_then(|u| u.completion_tokens),
        })
    }
}
