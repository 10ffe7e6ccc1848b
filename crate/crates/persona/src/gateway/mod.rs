// SPDX-License-Identifier: MIT OR Apache-2.0

//! Backend-agnostic contract over a causal language model.
//!
//! A [`ModelGateway`] supports three kinds of generation call:
//!
//! - plain [`generate`](ModelGateway::generate),
//! - [`generate_with_capture`](ModelGateway::generate_with_capture), which
//!   additionally records the residual-stream value at one layer for every
//!   generated token, and
//! - [`generate_with_steering`](ModelGateway::generate_with_steering), which
//!   adds caller-supplied vectors to the residual stream at the hooked layers
//!   during the forward pass.
//!
//! All three are deterministic functions of `(request, spec, seed)` on a fixed
//! backend build. A gateway instance is single-consumer (one in-flight
//! generation at a time, hence `&mut self`); returned traces and descriptors
//! are immutable and safe to share across threads.

pub mod toy;

#[cfg(feature = "http")]
pub mod remote;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of a loaded model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub model_id: String,
    /// Residual-stream width `d`. Every vector exchanged with this model has
    /// this length.
    pub hidden_dim: usize,
    /// Number of hookable layers `L`; valid layer indices are `0..L`.
    pub num_layers: usize,
    pub tokenizer_id: String,
}

/// Role of one chat message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
}

impl ChatMessage {
    pub fn user(text: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            text: text.into(),
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            text: text.into(),
        }
    }
}

/// Sampling parameters for one generation call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Softmax temperature; `0.0` means greedy decoding.
    pub temperature: f32,
    /// Nucleus mass in `(0, 1]`.
    pub top_p: f32,
    pub max_new_tokens: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 1.0,
            top_p: 1.0,
            max_new_tokens: 64,
        }
    }
}

/// A generation request: optional system prompt, chat history, sampling
/// parameters, and the seed that makes the call reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_prompt: Option<String>,
    pub messages: Vec<ChatMessage>,
    pub sampling: SamplingParams,
    pub seed: u64,
}

impl GenerationRequest {
    /// Single-user-turn request with default sampling.
    pub fn simple(system_prompt: Option<&str>, user_text: &str, seed: u64) -> Self {
        GenerationRequest {
            system_prompt: system_prompt.map(str::to_owned),
            messages: vec![ChatMessage::user(user_text)],
            sampling: SamplingParams::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.messages.is_empty() {
            return Err(Error::Precondition("messages must be non-empty".into()));
        }
        if self.sampling.max_new_tokens == 0 {
            return Err(Error::Precondition("max_new_tokens must be >= 1".into()));
        }
        if self.sampling.temperature < 0.0 {
            return Err(Error::Precondition("temperature must be >= 0".into()));
        }
        if !(self.sampling.top_p > 0.0 && self.sampling.top_p <= 1.0) {
            return Err(Error::Precondition("top_p must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Generated text plus the number of tokens produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub token_count: usize,
}

/// Which forward positions a trace (or an injection) covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionKind {
    GeneratedOnly,
    AllPositions,
}

/// Residual-stream values captured at one layer during one generation call.
///
/// With [`PositionKind::GeneratedOnly`], `positions[i]` is the residual value
/// at the hooked layer for the forward position whose logits produced
/// generated token `i`, so the trace has exactly one vector per generated
/// token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub layer: usize,
    pub positions: Vec<Vec<f32>>,
    pub position_kind: PositionKind,
}

impl ActivationTrace {
    /// Mean over positions, accumulated in f64. Errors on an empty trace.
    pub fn position_mean(&self) -> Result<Vec<f64>> {
        if self.positions.is_empty() {
            return Err(Error::Precondition("trace has no positions".into()));
        }
        let dim = self.positions[0].len();
        let mut acc = vec![0.0f64; dim];
        for pos in &self.positions {
            for (a, &v) in acc.iter_mut().zip(pos.iter()) {
                *a += f64::from(v);
            }
        }
        let n = self.positions.len() as f64;
        for a in &mut acc {
            *a /= n;
        }
        Ok(acc)
    }
}

/// Additive residual-stream injections, at most one per layer once
/// canonicalized. Vectors are pre-scaled; the gateway adds them verbatim at
/// every forward position it processes (see [`toy::InjectPositions`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SteeringSpec {
    injections: Vec<(usize, Vec<f32>)>,
}

impl SteeringSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single-layer spec.
    pub fn single(layer: usize, vector: Vec<f32>) -> Self {
        let mut spec = Self::new();
        spec.add(layer, vector);
        spec
    }

    /// Add an injection. Entries at the same layer are summed by
    /// [`canonicalize`](Self::canonicalize) before use.
    pub fn add(&mut self, layer: usize, vector: Vec<f32>) -> &mut Self {
        self.injections.push((layer, vector));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.injections.is_empty()
    }

    /// Entries in insertion order, prior to canonicalization.
    pub fn entries(&self) -> &[(usize, Vec<f32>)] {
        &self.injections
    }

    /// Sum same-layer entries element-wise and sort by layer, validating every
    /// vector against the descriptor.
    pub fn canonicalize(&self, descriptor: &ModelDescriptor) -> Result<Vec<(usize, Vec<f32>)>> {
        let mut merged: Vec<(usize, Vec<f32>)> = Vec::new();
        for (layer, vector) in &self.injections {
            if *layer >= descriptor.num_layers {
                return Err(Error::LayerOutOfRange {
                    layer: *layer,
                    num_layers: descriptor.num_layers,
                });
            }
            if vector.len() != descriptor.hidden_dim {
                return Err(Error::DimensionMismatch {
                    expected: descriptor.hidden_dim,
                    got: vector.len(),
                });
            }
            match merged.iter_mut().find(|(l, _)| l == layer) {
                Some((_, acc)) => {
                    for (a, v) in acc.iter_mut().zip(vector.iter()) {
                        *a += v;
                    }
                }
                None => merged.push((*layer, vector.clone())),
            }
        }
        merged.sort_by_key(|(l, _)| *l);
        Ok(merged)
    }
}

/// The gateway contract. See the module docs for semantics.
pub trait ModelGateway {
    /// Stable descriptor; repeated calls return identical values.
    fn describe(&self) -> Result<ModelDescriptor>;

    /// Plain generation.
    fn generate(&mut self, request: &GenerationRequest) -> Result<Generation>;

    /// Generation plus a residual trace at `layer` covering generated tokens.
    fn generate_with_capture(
        &mut self,
        request: &GenerationRequest,
        layer: usize,
    ) -> Result<(Generation, ActivationTrace)>;

    /// Generation with the spec's vectors added to the residual stream.
    fn generate_with_steering(
        &mut self,
        request: &GenerationRequest,
        spec: &SteeringSpec,
    ) -> Result<Generation>;

    /// Capture at several layers for the same seeded call.
    ///
    /// The default implementation repeats the call per layer; seeded
    /// determinism makes the texts identical, which is asserted.
    fn generate_with_capture_layers(
        &mut self,
        request: &GenerationRequest,
        layers: &[usize],
    ) -> Result<(Generation, Vec<ActivationTrace>)> {
        let mut traces = Vec::with_capacity(layers.len());
        let mut generation: Option<Generation> = None;
        for &layer in layers {
            let (gen, trace) = self.generate_with_capture(request, layer)?;
            if let Some(prev) = &generation {
                if prev.text != gen.text {
                    return Err(Error::BackendFailure(
                        "seeded generation diverged across capture layers".into(),
                    ));
                }
            } else {
                generation = Some(gen);
            }
            traces.push(trace);
        }
        let generation = generation
            .ok_or_else(|| Error::Precondition("capture layer list must be non-empty".into()))?;
        Ok((generation, traces))
    }
}

impl<T: ModelGateway + ?Sized> ModelGateway for Box<T> {
    fn describe(&self) -> Result<ModelDescriptor> {
        (**self).describe()
    }

    fn generate(&mut self, request: &GenerationRequest) -> Result<Generation> {
        (**self).generate(request)
    }

    fn generate_with_capture(
        &mut self,
        request: &GenerationRequest,
        layer: usize,
    ) -> Result<(Generation, ActivationTrace)> {
        (**self).generate_with_capture(request, layer)
    }

    fn generate_with_steering(
        &mut self,
        request: &GenerationRequest,
        spec: &SteeringSpec,
    ) -> Result<Generation> {
        (**self).generate_with_steering(request, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn descr() -> ModelDescriptor {
        ModelDescriptor {
            model_id: "m".into(),
            hidden_dim: 3,
            num_layers: 4,
            tokenizer_id: "t".into(),
        }
    }

    #[test]
    fn canonicalize_sums_same_layer_entries() {
        let mut spec = SteeringSpec::new();
        spec.add(1, vec![1.0, 2.0, 3.0]);
        spec.add(1, vec![0.5, -2.0, 1.0]);
        spec.add(0, vec![0.0, 0.0, 1.0]);
        let canon = spec.canonicalize(&descr()).unwrap();
        assert_eq!(canon.len(), 2);
        assert_eq!(canon[0].0, 0);
        assert_eq!(canon[1], (1, vec![1.5, 0.0, 4.0]));
    }

    #[test]
    fn canonicalize_rejects_bad_layer_and_dim() {
        let spec = SteeringSpec::single(4, vec![0.0; 3]);
        assert!(matches!(
            spec.canonicalize(&descr()),
            Err(Error::LayerOutOfRange { layer: 4, .. })
        ));

        let spec = SteeringSpec::single(0, vec![0.0; 2]);
        assert!(matches!(
            spec.canonicalize(&descr()),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn request_validation_rejects_empty_messages() {
        let req = GenerationRequest {
            system_prompt: None,
            messages: vec![],
            sampling: SamplingParams::default(),
            seed: 0,
        };
        assert!(matches!(req.validate(), Err(Error::Precondition(_))));
    }

    #[test]
    fn trace_position_mean_is_elementwise() {
        let trace = ActivationTrace {
            layer: 0,
            positions: vec![vec![1.0, 0.0], vec![3.0, 2.0]],
            position_kind: PositionKind::GeneratedOnly,
        };
        assert_eq!(trace.position_mean().unwrap(), vec![2.0, 1.0]);
    }
}
