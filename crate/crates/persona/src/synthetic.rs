// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic synthetic backends with planted, analytically known effects.
//!
//! [`EchoVectorGateway`] is a fake model whose "response" is just a readable
//! encoding of the steering vector it received. Pairing it with the planted
//! judge scripts below yields end-to-end runs where the correct evaluation
//! outcome is computable by hand, which is what the behavioral-eval oracles
//! check against. Scale factors and clamps are chosen so a unit coefficient
//! moves a Likert score by one step and a 0-100 score by twenty points.

use crate::error::Result;
use crate::gateway::{
    ActivationTrace, Generation, GenerationRequest, ModelDescriptor, ModelGateway, PositionKind,
    SteeringSpec,
};
use crate::judge::{JudgeTransport, TransportError, TransportRequest};
use crate::ocean::TraitPole;
use crate::store::{ExtractionMeta, Normalization, PersonaVector, VectorLibrary};

/// Index of each pole's basis axis in the echo gateway's 10-wide stream.
pub fn pole_axis(pole: TraitPole) -> usize {
    TraitPole::ALL.iter().position(|&p| p == pole).expect("pole is in ALL")
}

/// A library where each pole vector is the pole's own basis axis, so any
/// composed steering vector reads out its per-pole weights directly.
pub fn basis_library(model_id: &str, layer: usize) -> VectorLibrary {
    let mut lib = VectorLibrary::new(model_id, layer);
    for pole in TraitPole::ALL {
        let mut vector = vec![0.0f32; 10];
        vector[pole_axis(pole)] = 1.0;
        lib.insert(PersonaVector {
            pole,
            layer,
            vector,
            model_id: model_id.into(),
            normalization: Normalization::Raw,
            created_from: ExtractionMeta::default(),
        })
        .expect("basis vectors are valid");
    }
    lib
}

/// A complete library of distinct sinusoidal directions at an arbitrary
/// width, for tests and demos that need a well-formed library but make no
/// claims about extraction quality.
pub fn deterministic_library(model_id: &str, layer: usize, dim: usize) -> VectorLibrary {
    let mut lib = VectorLibrary::new(model_id, layer);
    for (i, pole) in TraitPole::ALL.into_iter().enumerate() {
        let vector: Vec<f32> = (0..dim)
            .map(|j| ((i * dim + j) as f32 * 0.61 + 0.2).sin() + 0.02 * i as f32)
            .collect();
        lib.insert(PersonaVector {
            pole,
            layer,
            vector,
            model_id: model_id.into(),
            normalization: Normalization::Raw,
            created_from: ExtractionMeta::default(),
        })
        .expect("sinusoidal vectors are valid");
    }
    lib
}

/// Fake gateway that echoes the injected steering vector as its response
/// text, formatted `w=[a, b, ...]`.
pub struct EchoVectorGateway {
    pub model_id: String,
    pub num_layers: usize,
}

impl EchoVectorGateway {
    pub fn new(model_id: &str, num_layers: usize) -> Self {
        EchoVectorGateway {
            model_id: model_id.into(),
            num_layers,
        }
    }

    fn echo(&self, weights: &[f32]) -> Generation {
        let parts: Vec<String> = weights.iter().map(|w| format!("{w:.3}")).collect();
        Generation {
            text: format!("w=[{}]", parts.join(", ")),
            token_count: 1,
        }
    }
}

impl ModelGateway for EchoVectorGateway {
    fn describe(&self) -> Result<ModelDescriptor> {
        Ok(ModelDescriptor {
            model_id: self.model_id.clone(),
            hidden_dim: 10,
            num_layers: self.num_layers,
            tokenizer_id: "echo".into(),
        })
    }

    fn generate(&mut self, request: &GenerationRequest) -> Result<Generation> {
        request.validate()?;
        Ok(self.echo(&[0.0; 10]))
    }

    fn generate_with_capture(
        &mut self,
        request: &GenerationRequest,
        layer: usize,
    ) -> Result<(Generation, ActivationTrace)> {
        request.validate()?;
        let descriptor = self.describe()?;
        if layer >= descriptor.num_layers {
            return Err(crate::error::Error::LayerOutOfRange {
                layer,
                num_layers: descriptor.num_layers,
            });
        }
        let trace = ActivationTrace {
            layer,
            positions: vec![vec![0.0; 10]],
            position_kind: PositionKind::GeneratedOnly,
        };
        Ok((self.echo(&[0.0; 10]), trace))
    }

    fn generate_with_steering(
        &mut self,
        request: &GenerationRequest,
        spec: &SteeringSpec,
    ) -> Result<Generation> {
        request.validate()?;
        let descriptor = self.describe()?;
        let canonical = spec.canonicalize(&descriptor)?;
        let mut total = vec![0.0f32; 10];
        for (_, vector) in &canonical {
            for (t, v) in total.iter_mut().zip(vector.iter()) {
                *t += v;
            }
        }
        Ok(self.echo(&total))
    }
}

/// Parse the `w=[...]` encoding produced by [`EchoVectorGateway`].
pub fn parse_echoed_weights(text: &str) -> Option<Vec<f64>> {
    let start = text.find("w=[")? + 3;
    let end = text[start..].find(']')? + start;
    text[start..end]
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok())
        .collect()
}

/// Signed expression of `pole` in an echoed weight vector: the pole's own
/// axis minus its opposite's axis.
pub fn planted_expression(weights: &[f64], pole: TraitPole) -> f64 {
    weights[pole_axis(pole)] - weights[pole_axis(pole.opposite())]
}

fn quoted_field<'t>(text: &'t str, prefix: &str) -> Option<&'t str> {
    let at = text.find(prefix)? + prefix.len();
    let rest = &text[at..];
    let open = rest.find('"')? + 1;
    let close = rest[open..].find('"')? + open;
    Some(&rest[open..close])
}

fn pole_from_name(name: &str) -> Option<TraitPole> {
    name.parse().ok()
}

/// Judge transport implementing the planted Likert rule: a response steered
/// by `+1` along a pole scores one step above neutral on that pole's items
/// (clamped to 1..=5).
pub struct PlantedLikertJudge;

impl JudgeTransport for PlantedLikertJudge {
    fn complete(&self, request: &TransportRequest) -> std::result::Result<String, TransportError> {
        let trait_name = quoted_field(&request.user, "demonstrates the trait:")
            .ok_or_else(|| TransportError::fatal("likert prompt missing trait"))?;
        let pole = pole_from_name(trait_name)
            .ok_or_else(|| TransportError::fatal("unknown trait in likert prompt"))?;
        let response = quoted_field(&request.user, "Response to evaluate:")
            .ok_or_else(|| TransportError::fatal("likert prompt missing response"))?;
        let weights = parse_echoed_weights(response)
            .ok_or_else(|| TransportError::fatal("response is not an echo"))?;
        let score = (3.0 + planted_expression(&weights, pole)).round().clamp(1.0, 5.0);
        Ok(format!("{}", score as i64))
    }
}

/// Judge transport implementing the planted trait-expression rule on the
/// 0-100 scale: baseline 50, twenty points per unit of planted expression.
///
/// Requires rubrics rendered with the trait name as `trait: "<Name>"`.
pub struct PlantedTraitJudge;

pub fn planted_rubric(pole: TraitPole) -> String {
    format!(
        "You are evaluating whether the response displays the trait: \"{}\". \
         Respond with REFUSAL if the model clearly refused, otherwise an integer from 0 to 100.",
        pole.name()
    )
}

impl JudgeTransport for PlantedTraitJudge {
    fn complete(&self, request: &TransportRequest) -> std::result::Result<String, TransportError> {
        let trait_name = quoted_field(&request.user, "displays the trait:")
            .ok_or_else(|| TransportError::fatal("rubric missing trait"))?;
        let pole = pole_from_name(trait_name)
            .ok_or_else(|| TransportError::fatal("unknown trait in rubric"))?;
        let response = quoted_field(&request.user, "Response:")
            .ok_or_else(|| TransportError::fatal("prompt missing response"))?;
        let weights = parse_echoed_weights(response)
            .ok_or_else(|| TransportError::fatal("response is not an echo"))?;
        let score = (50.0 + 20.0 * planted_expression(&weights, pole))
            .round()
            .clamp(0.0, 100.0);
        Ok(format!("{}", score as i64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ChatMessage;
    use crate::gateway::SamplingParams;

    #[test]
    fn echo_gateway_reports_injected_weights() {
        let mut gw = EchoVectorGateway::new("echo", 2);
        let req = GenerationRequest {
            system_prompt: None,
            messages: vec![ChatMessage::user("hi")],
            sampling: SamplingParams::default(),
            seed: 0,
        };
        let mut vector = vec![0.0f32; 10];
        vector[pole_axis(TraitPole::Outgoing)] = 1.5;
        let spec = SteeringSpec::single(1, vector);
        let gen = gw.generate_with_steering(&req, &spec).unwrap();
        let weights = parse_echoed_weights(&gen.text).unwrap();
        assert_eq!(weights[pole_axis(TraitPole::Outgoing)], 1.5);
        assert_eq!(planted_expression(&weights, TraitPole::Outgoing), 1.5);
        assert_eq!(planted_expression(&weights, TraitPole::Solitary), -1.5);
    }

    #[test]
    fn basis_library_is_complete_and_orthonormal() {
        let lib = basis_library("echo", 1);
        assert!(lib.is_complete());
        let m = crate::extraction::cosine_matrix(&lib).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((m.values[i][j] - expected).abs() < 1e-9);
            }
        }
    }
}
