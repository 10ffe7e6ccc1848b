// SPDX-License-Identifier: MIT OR Apache-2.0

//! Remote chat-API backend.
//!
//! Supports plain generation over a chat-completion endpoint. Residual
//! capture and steering require access to model internals, so this backend
//! rejects them with `CapabilityUnsupported`. Credentials come from the
//! `PERSONA_MODEL_API_KEY` environment variable.

use crate::error::{Error, Result};
use crate::gateway::{
    ActivationTrace, Generation, GenerationRequest, ModelDescriptor, ModelGateway, Role,
    SteeringSpec,
};
use crate::net::{ChatCall, HttpChatClient};

pub const MODEL_API_KEY_VAR: &str = "PERSONA_MODEL_API_KEY";

/// Connection settings for a remote model.
#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model_id: String,
    /// Advertised residual width; remote backends cannot verify it.
    pub hidden_dim: usize,
    /// Advertised layer count.
    pub num_layers: usize,
    pub tokenizer_id: String,
}

pub struct RemoteGateway {
    config: RemoteConfig,
    client: HttpChatClient,
}

impl RemoteGateway {
    /// Build a gateway, reading the API key from `PERSONA_MODEL_API_KEY`.
    pub fn from_env(config: RemoteConfig) -> Result<Self> {
        let key = std::env::var(MODEL_API_KEY_VAR)
            .map_err(|_| Error::AuthFailure(format!("{MODEL_API_KEY_VAR} is not set")))?;
        Ok(Self::with_api_key(config, key))
    }

    pub fn with_api_key(config: RemoteConfig, api_key: String) -> Self {
        let client = HttpChatClient::new(config.base_url.clone(), api_key);
        RemoteGateway { config, client }
    }
}

impl ModelGateway for RemoteGateway {
    fn describe(&self) -> Result<ModelDescriptor> {
        Ok(ModelDescriptor {
            model_id: self.config.model_id.clone(),
            hidden_dim: self.config.hidden_dim,
            num_layers: self.config.num_layers,
            tokenizer_id: self.config.tokenizer_id.clone(),
        })
    }

    fn generate(&mut self, request: &GenerationRequest) -> Result<Generation> {
        request.validate()?;
        let messages = request
            .messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                (role.to_string(), m.text.clone())
            })
            .collect();
        let call = ChatCall {
            model: self.config.model_id.clone(),
            system: request.system_prompt.clone(),
            messages,
            temperature: request.sampling.temperature,
            max_tokens: Some(request.sampling.max_new_tokens),
            seed: Some(request.seed),
        };
        let reply = self
            .client
            .chat(&call)
            .map_err(|e| Error::BackendFailure(e.message))?;
        let token_count = reply
            .completion_tokens
            .unwrap_or_else(|| reply.text.split_whitespace().count());
        Ok(Generation {
            text: reply.text,
            token_count,
        })
    }

    fn generate_with_capture(
        &mut self,
        _request: &GenerationRequest,
        _layer: usize,
    ) -> Result<(Generation, ActivationTrace)> {
        Err(Error::CapabilityUnsupported(
            "activation capture on a remote backend".into(),
        ))
    }

    fn generate_with_steering(
        &mut self,
        _request: &GenerationRequest,
        _spec: &SteeringSpec,
    ) -> Result<Generation> {
        Err(Error::CapabilityUnsupported(
            "residual steering on a remote backend".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::SamplingParams;

    #[test]
    fn capture_and_steering_are_rejected() {
        let mut gw = RemoteGateway::with_api_key(
            RemoteConfig {
                base_url: "https://example.invalid".into(),
                model_id: "m".into(),
                hidden_dim: 8,
                num_layers: 2,
                tokenizer_id: "t".into(),
            },
            "k".into(),
        );
        let req = GenerationRequest {
            system_prompt: None,
            messages: vec![crate::gateway::ChatMessage::user("hi")],
            sampling: SamplingParams::default(),
            seed: 0,
        };
        assert!(matches!(
            gw.generate_with_capture(&req, 0),
            Err(Error::CapabilityUnsupported(_))
        ));
        assert!(matches!(
            gw.generate_with_steering(&req, &SteeringSpec::new()),
            Err(Error::CapabilityUnsupported(_))
        ));
    }
}
