// SPDX-License-Identifier: MIT OR Apache-2.0

//! Judge transports: the HTTP chat endpoint and a scriptable stand-in.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// One judge call as seen by a transport.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f32,
    pub max_tokens: Option<usize>,
}

/// Transport failure; `retryable` drives backoff, `auth` maps to a hard
/// authentication error.
#[derive(Debug, Clone)]
pub struct TransportError {
    pub retryable: bool,
    pub auth: bool,
    pub message: String,
}

impl TransportError {
    pub fn transient(message: impl Into<String>) -> Self {
        TransportError {
            retryable: true,
            auth: false,
            message: message.into(),
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        TransportError {
            retryable: false,
            auth: false,
            message: message.into(),
        }
    }
}

pub trait JudgeTransport: Send + Sync {
    fn complete(&self, request: &TransportRequest) -> Result<String, TransportError>;
}

type ScriptFn = dyn FnMut(&TransportRequest) -> Result<String, TransportError> + Send;

/// Deterministic transport driven by a closure; used by tests, examples, and
/// dry runs. Records how many calls reached it, which is how cache behavior
/// is observed.
pub struct ScriptedTransport {
    script: Mutex<Box<ScriptFn>>,
    calls: AtomicUsize,
}

impl ScriptedTransport {
    pub fn new<F>(script: F) -> Self
    where
        F: FnMut(&TransportRequest) -> Result<String, TransportError> + Send + 'static,
    {
        ScriptedTransport {
            script: Mutex::new(Box::new(script)),
            calls: AtomicUsize::new(0),
        }
    }

    /// Always answer with the same text.
    pub fn constant(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new(move |_| Ok(text.clone()))
    }

    /// Answer from a queue, failing once the queue is exhausted.
    pub fn queue(replies: Vec<Result<String, TransportError>>) -> Self {
        let mut replies = std::collections::VecDeque::from(replies);
        Self::new(move |_| {
            replies
                .pop_front()
                .unwrap_or_else(|| Err(TransportError::fatal("scripted queue exhausted")))
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl JudgeTransport for ScriptedTransport {
    fn complete(&self, request: &TransportRequest) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.script.lock().expect("script poisoned"))(request)
    }
}

#[cfg(feature = "http")]
pub use http_transport::HttpTransport;

#[cfg(feature = "http")]
mod http_transport {
    use super::{JudgeTransport, TransportError, TransportRequest};
    use crate::net::{ChatCall, HttpChatClient};

    /// Chat-completion judge endpoint.
    pub struct HttpTransport {
        client: HttpChatClient,
    }

    impl HttpTransport {
        pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, debug: bool) -> Self {
            HttpTransport {
                client: HttpChatClient::new(base_url, api_key).with_debug(debug),
            }
        }
    }

    impl JudgeTransport for HttpTransport {
        fn complete(&self, request: &TransportRequest) -> Result<String, TransportError> {
            let call = ChatCall {
                model: request.model.clone(),
                system: if request.system.is_empty() {
                    None
                } else {
                    Some(request.system.clone())
                },
                messages: vec![("user".into(), request.user.clone())],
                temperature: request.temperature,
                max_tokens: request.max_tokens,
                seed: None,
            };
            match self.client.chat(&call) {
                Ok(reply) => Ok(reply.text),
                Err(e) => Err(TransportError {
                    retryable: e.retryable,
                    auth: e.message.contains("HTTP 401") || e.message.contains("HTTP 403"),
                    message: e.message,
                }),
            }
        }
    }
}
