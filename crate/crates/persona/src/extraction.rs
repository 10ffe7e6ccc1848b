// SPDX-License-Identifier: MIT OR Apache-2.0

//! Contrastive persona-vector extraction and its analyses.
//!
//! The pipeline: a generator LLM produces per-trait artifacts (contrastive
//! system-prompt pairs, evaluation questions, a 0-100 scoring rubric); the
//! target model answers the extraction questions under both prompt polarities
//! while residual activations are captured; the persona vector is the
//! difference between the two sides' mean activations. Layer and coefficient
//! sweeps then validate the vectors with a judge, and the cosine matrix
//! probes orthogonality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::scale;
use crate::error::{Error, Result};
use crate::gateway::{GenerationRequest, ModelGateway, SamplingParams, SteeringSpec};
use crate::judge::{first_json_object, JudgeClient, TraitVerdictKind};
use crate::ocean::TraitPole;
use crate::seeds::derive_seed;
use crate::store::{ExtractionMeta, Normalization, PersonaVector, VectorLibrary};

pub const PROMPT_PAIRS_PER_TRAIT: usize = 5;
pub const QUESTIONS_PER_TRAIT: usize = 40;
pub const EXTRACTION_HALF: usize = QUESTIONS_PER_TRAIT / 2;

/// One contrastive system-prompt pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    #[serde(rename = "pos")]
    pub positive: String,
    #[serde(rename = "neg")]
    pub negative: String,
}

/// Generated artifacts for one trait pole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitArtifacts {
    pub trait_id: TraitPole,
    pub prompt_pairs: Vec<PromptPair>,
    /// 40 questions: the first 20 drive extraction, the last 20 validation.
    pub questions: Vec<String>,
    pub eval_rubric: String,
}

impl TraitArtifacts {
    pub fn validate(&self) -> Result<()> {
        if self.prompt_pairs.len() != PROMPT_PAIRS_PER_TRAIT {
            return Err(Error::InvariantViolation(format!(
                "expected {PROMPT_PAIRS_PER_TRAIT} prompt pairs, found {}",
                self.prompt_pairs.len()
            )));
        }
        if self.questions.len() != QUESTIONS_PER_TRAIT {
            return Err(Error::InvariantViolation(format!(
                "expected {QUESTIONS_PER_TRAIT} questions, found {}",
                self.questions.len()
            )));
        }
        if self
            .prompt_pairs
            .iter()
            .any(|p| p.positive.trim().is_empty() || p.negative.trim().is_empty())
        {
            return Err(Error::InvariantViolation("empty prompt in a pair".into()));
        }
        if self.questions.iter().any(|q| q.trim().is_empty()) {
            return Err(Error::InvariantViolation("empty question".into()));
        }
        let trait_name = self.trait_id.name().to_ascii_lowercase();
        if !self.eval_rubric.to_ascii_lowercase().contains(&trait_name) {
            return Err(Error::InvariantViolation(format!(
                "rubric does not mention the trait `{trait_name}`"
            )));
        }
        Ok(())
    }

    /// First half of the questions, used for vector extraction.
    pub fn extraction_half(&self) -> &[String] {
        &self.questions[..EXTRACTION_HALF]
    }

    /// Held-out second half, used for steering validation.
    pub fn validation_half(&self) -> &[String] {
        &self.questions[EXTRACTION_HALF..]
    }
}

#[derive(Deserialize)]
struct ArtifactPayload {
    instruction: Vec<PromptPair>,
    questions: Vec<String>,
    eval_prompt: String,
}

/// Settings shared by the extraction and sweep operations.
#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    pub sampling: SamplingParams,
    pub base_seed: u64,
    pub mean_mode: MeanMode,
    /// Extra attempts when the generator returns a malformed payload.
    pub artifact_retries: usize,
    /// Cap on validation questions per sweep point; `None` uses all 20.
    pub validation_questions: Option<usize>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            sampling: SamplingParams {
                temperature: 1.0,
                top_p: 1.0,
                max_new_tokens: 32,
            },
            base_seed: 42,
            mean_mode: MeanMode::PerResponse,
            artifact_retries: 2,
            validation_questions: None,
        }
    }
}

/// How activations reduce to one vector per side.
///
/// `PerResponse` (default) averages positions within a response first, so
/// long responses do not dominate; `PerToken` pools every position directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    #[default]
    PerResponse,
    PerToken,
}

fn artifact_prompt(trait_id: TraitPole, description: &str) -> String {
    format!(
        r#"You are preparing artifacts for contrastive personality-trait extraction from a language model.

Trait: "{name}" (the {polarity} pole of {dimension})
Trait description: {description}

Return a JSON object with exactly these fields:
1. "instruction": an array of exactly {pairs} pairs of contrastive system prompts, each an object {{"pos": "...", "neg": "..."}}. The "pos" prompt must make the assistant strongly express the trait; the "neg" prompt must make it suppress the trait and express the opposite.
2. "questions": an array of exactly {questions} open-ended questions designed to evoke trait-relevant behavior. The first {half} will be used for extraction and the remaining {half} for validation.
3. "eval_prompt": a rubric that instructs an evaluator to respond with REFUSAL if the model clearly refused to answer, or with a single integer score from 0 (trait not present) to 100 (trait strongly present). The rubric must name the trait "{name}" and describe the behaviors that count as expressing it.

Return only the JSON object."#,
        name = trait_id.name(),
        polarity = trait_id.polarity().as_str(),
        dimension = trait_id.dimension().name(),
        description = description,
        pairs = PROMPT_PAIRS_PER_TRAIT,
        questions = QUESTIONS_PER_TRAIT,
        half = EXTRACTION_HALF,
    )
}

/// Ask the generator for trait artifacts, re-asking on malformed payloads up
/// to the configured retry budget.
pub fn generate_trait_artifacts(
    generator: &JudgeClient,
    trait_id: TraitPole,
    trait_description: &str,
    config: &ExtractionConfig,
) -> Result<TraitArtifacts> {
    let prompt = artifact_prompt(trait_id, trait_description);
    let attempts = config.artifact_retries + 1;
    let mut last_reason = String::new();
    for attempt in 0..attempts {
        let raw = if attempt == 0 {
            generator.complete("", &prompt)?
        } else {
            generator.complete_uncached("", &prompt)?
        };
        match parse_artifacts(trait_id, &raw) {
            Ok(artifacts) => return Ok(artifacts),
            Err(e) => last_reason = e.to_string(),
        }
    }
    Err(Error::MalformedAfterRetries {
        attempts,
        reason: last_reason,
    })
}

fn parse_artifacts(trait_id: TraitPole, raw: &str) -> Result<TraitArtifacts> {
    let json = first_json_object(raw)
        .ok_or_else(|| Error::Serde("no JSON object in generator output".into()))?;
    let payload: ArtifactPayload = serde_json::from_str(&json)?;
    let artifacts = TraitArtifacts {
        trait_id,
        prompt_pairs: payload.instruction,
        questions: payload.questions,
        eval_rubric: payload.eval_prompt,
    };
    artifacts.validate()?;
    Ok(artifacts)
}

/// Which contrastive side a response belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContrastiveSide {
    Positive,
    Negative,
}

impl ContrastiveSide {
    pub fn as_str(self) -> &'static str {
        match self {
            ContrastiveSide::Positive => "positive",
            ContrastiveSide::Negative => "negative",
        }
    }
}

/// One captured response: question, prompt pair, text, and one trace per
/// requested layer (aligned with [`ContrastiveBatch::layers`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveResponse {
    pub question_index: usize,
    pub question: String,
    pub pair_index: usize,
    pub response_text: String,
    pub traces: Vec<crate::gateway::ActivationTrace>,
}

/// All captured responses for one trait, both sides aligned on the same
/// (question, pair) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveBatch {
    pub trait_id: TraitPole,
    pub model_id: String,
    pub layers: Vec<usize>,
    pub positive: Vec<ContrastiveResponse>,
    pub negative: Vec<ContrastiveResponse>,
}

impl ContrastiveBatch {
    fn trace_index(&self, layer: usize) -> Result<usize> {
        self.layers
            .iter()
            .position(|&l| l == layer)
            .ok_or_else(|| Error::Precondition(format!("batch has no traces at layer {layer}")))
    }
}

/// Generate responses for every (extraction question x prompt pair x side)
/// cell, capturing residual traces at each requested layer.
pub fn collect_contrastive_activations<G: ModelGateway>(
    gateway: &mut G,
    artifacts: &TraitArtifacts,
    layers: &[usize],
    config: &ExtractionConfig,
) -> Result<ContrastiveBatch> {
    artifacts.validate()?;
    if layers.is_empty() {
        return Err(Error::Precondition("layers must be non-empty".into()));
    }
    let descriptor = gateway.describe()?;
    let mut batch = ContrastiveBatch {
        trait_id: artifacts.trait_id,
        model_id: descriptor.model_id,
        layers: layers.to_vec(),
        positive: Vec::new(),
        negative: Vec::new(),
    };
    for side in [ContrastiveSide::Positive, ContrastiveSide::Negative] {
        for (question_index, question) in artifacts.extraction_half().iter().enumerate() {
            for (pair_index, pair) in artifacts.prompt_pairs.iter().enumerate() {
                let system = match side {
                    ContrastiveSide::Positive => &pair.positive,
                    ContrastiveSide::Negative => &pair.negative,
                };
                let seed = derive_seed(
                    config.base_seed,
                    &format!(
                        "extract/{}/{}/{question_index}/{pair_index}",
                        artifacts.trait_id.slug(),
                        side.as_str()
                    ),
                );
                let request = GenerationRequest {
                    system_prompt: Some(system.clone()),
                    messages: vec![crate::gateway::ChatMessage::user(question)],
                    sampling: config.sampling,
                    seed,
                };
                let (generation, traces) = gateway
                    .generate_with_capture_layers(&request, layers)
                    .map_err(|e| Error::PartialBatch {
                        question: question_index,
                        pair: pair_index,
                        side: side.as_str(),
                        cause: e.to_string(),
                    })?;
                let response = ContrastiveResponse {
                    question_index,
                    question: question.clone(),
                    pair_index,
                    response_text: generation.text,
                    traces,
                };
                match side {
                    ContrastiveSide::Positive => batch.positive.push(response),
                    ContrastiveSide::Negative => batch.negative.push(response),
                }
            }
        }
    }
    Ok(batch)
}

/// Sum in a canonical (value-sorted) order so the result is independent of
/// input order, bit for bit.
fn canonical_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

fn side_mean(
    responses: &[ContrastiveResponse],
    trace_index: usize,
    mean_mode: MeanMode,
    side: &'static str,
) -> Result<Vec<f64>> {
    if responses.is_empty() {
        return Err(Error::EmptySide { side });
    }
    let dim = responses[0].traces[trace_index]
        .positions
        .first()
        .ok_or(Error::EmptySide { side })?
        .len();
    match mean_mode {
        MeanMode::PerResponse => {
            let means: Vec<Vec<f64>> = responses
                .iter()
                .map(|r| r.traces[trace_index].position_mean())
                .collect::<Result<_>>()?;
            let mut out = vec![0.0f64; dim];
            for (j, slot) in out.iter_mut().enumerate() {
                let mut column: Vec<f64> = means.iter().map(|m| m[j]).collect();
                *slot = canonical_sum(&mut column) / means.len() as f64;
            }
            Ok(out)
        }
        MeanMode::PerToken => {
            let mut out = vec![0.0f64; dim];
            let total: usize = responses
                .iter()
                .map(|r| r.traces[trace_index].positions.len())
                .sum();
            if total == 0 {
                return Err(Error::EmptySide { side });
            }
            for (j, slot) in out.iter_mut().enumerate() {
                let mut column: Vec<f64> = responses
                    .iter()
                    .flat_map(|r| r.traces[trace_index].positions.iter())
                    .map(|p| f64::from(p[j]))
                    .collect();
                *slot = canonical_sum(&mut column) / total as f64;
            }
            Ok(out)
        }
    }
}

/// Mean-difference vector at one layer: positive-side mean minus
/// negative-side mean, accumulated in f64 and stored raw as f32.
///
/// Swapping the sides negates the result exactly, and permuting response
/// order leaves it unchanged (summation is canonically ordered).
pub fn compute_persona_vector(
    batch: &ContrastiveBatch,
    layer: usize,
    mean_mode: MeanMode,
) -> Result<PersonaVector> {
    let trace_index = batch.trace_index(layer)?;
    let positive = side_mean(&batch.positive, trace_index, mean_mode, "positive")?;
    let negative = side_mean(&batch.negative, trace_index, mean_mode, "negative")?;
    if positive.len() != negative.len() {
        return Err(Error::LengthMismatch {
            left: positive.len(),
            right: negative.len(),
        });
    }
    let vector: Vec<f32> = positive
        .iter()
        .zip(negative.iter())
        .map(|(p, n)| (p - n) as f32)
        .collect();
    let questions = batch
        .positive
        .iter()
        .map(|r| r.question_index)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let pairs = batch
        .positive
        .iter()
        .map(|r| r.pair_index)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    Ok(PersonaVector {
        pole: batch.trait_id,
        layer,
        vector,
        model_id: batch.model_id.clone(),
        normalization: Normalization::Raw,
        created_from: ExtractionMeta {
            question_count: questions,
            prompt_pair_count: pairs,
            positive_responses: batch.positive.len(),
            negative_responses: batch.negative.len(),
        },
    })
}

/// Sweep axis: candidate layers or steering coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Layer,
    Coefficient,
}

/// One judged sweep point. `mean_score` is absent when every verdict at this
/// point was a refusal or malformed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub mean_score: Option<f64>,
    pub n_scored: usize,
    pub n_refusals: usize,
    pub n_malformed: usize,
}

/// Judged scores along one sweep axis, sorted by axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub trait_id: TraitPole,
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

fn judge_steered_responses<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    artifacts: &TraitArtifacts,
    spec: &SteeringSpec,
    seed_label: &str,
    config: &ExtractionConfig,
) -> Result<(Vec<u8>, usize, usize)> {
    let mut scores = Vec::new();
    let mut refusals = 0usize;
    let mut malformed = 0usize;
    let limit = config
        .validation_questions
        .unwrap_or(usize::MAX)
        .min(artifacts.validation_half().len());
    for (qi, question) in artifacts.validation_half()[..limit].iter().enumerate() {
        let seed = derive_seed(config.base_seed, &format!("{seed_label}/{qi}"));
        let request = GenerationRequest {
            system_prompt: None,
            messages: vec![crate::gateway::ChatMessage::user(question)],
            sampling: config.sampling,
            seed,
        };
        let generation = gateway.generate_with_steering(&request, spec)?;
        let verdict = judge.score_trait(&artifacts.eval_rubric, question, &generation.text)?;
        match verdict.kind {
            TraitVerdictKind::Score(s) => scores.push(s),
            TraitVerdictKind::Refusal => refusals += 1,
            TraitVerdictKind::Malformed => malformed += 1,
        }
    }
    Ok((scores, refusals, malformed))
}

fn point_from_verdicts(
    axis_value: f64,
    scores: &[u8],
    refusals: usize,
    malformed: usize,
) -> SweepPoint {
    let mean = if scores.is_empty() {
        None
    } else {
        Some(scores.iter().map(|&s| f64::from(s)).sum::<f64>() / scores.len() as f64)
    };
    SweepPoint {
        axis_value,
        mean_score: mean,
        n_scored: scores.len(),
        n_refusals: refusals,
        n_malformed: malformed,
    }
}

/// Steer the validation questions with `alpha * vector` for each alpha and
/// judge trait expression. Refusals are excluded from the mean and counted.
pub fn sweep_coefficients<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    vector: &PersonaVector,
    artifacts: &TraitArtifacts,
    alphas: &[f64],
    config: &ExtractionConfig,
) -> Result<SweepResult> {
    artifacts.validate()?;
    if alphas.is_empty() {
        return Err(Error::Precondition("alphas must be non-empty".into()));
    }
    let descriptor = gateway.describe()?;
    if vector.vector.len() != descriptor.hidden_dim {
        return Err(Error::DimensionMismatch {
            expected: descriptor.hidden_dim,
            got: vector.vector.len(),
        });
    }
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let spec = SteeringSpec::single(vector.layer, scale(&vector.vector, alpha));
        let label = format!("sweep-coeff/{}/{alpha}", artifacts.trait_id.slug());
        let (scores, refusals, malformed) =
            judge_steered_responses(gateway, judge, artifacts, &spec, &label, config)?;
        points.push(point_from_verdicts(alpha, &scores, refusals, malformed));
    }
    points.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
    Ok(SweepResult {
        trait_id: artifacts.trait_id,
        axis: SweepAxis::Coefficient,
        points,
    })
}

/// Steer validation questions at a fixed coefficient using each candidate
/// layer's own vector, judging trait expression per layer.
pub fn sweep_layers<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    vectors_by_layer: &BTreeMap<usize, PersonaVector>,
    artifacts: &TraitArtifacts,
    coefficient: f64,
    config: &ExtractionConfig,
) -> Result<SweepResult> {
    artifacts.validate()?;
    if vectors_by_layer.is_empty() {
        return Err(Error::Precondition(
            "candidate layer set must be non-empty".into(),
        ));
    }
    let mut points = Vec::with_capacity(vectors_by_layer.len());
    for (&layer, vector) in vectors_by_layer {
        if vector.layer != layer {
            return Err(Error::Precondition(format!(
                "vector keyed at layer {layer} was extracted at layer {}",
                vector.layer
            )));
        }
        let spec = SteeringSpec::single(layer, scale(&vector.vector, coefficient));
        let label = format!("sweep-layer/{}/{layer}", artifacts.trait_id.slug());
        let (scores, refusals, malformed) =
            judge_steered_responses(gateway, judge, artifacts, &spec, &label, config)?;
        points.push(point_from_verdicts(layer as f64, &scores, refusals, malformed));
    }
    Ok(SweepResult {
        trait_id: artifacts.trait_id,
        axis: SweepAxis::Layer,
        points,
    })
}

/// Score change from baseline (alpha 0) to alpha +1 per trait.
pub fn activation_success(sweeps: &[SweepResult]) -> Result<BTreeMap<TraitPole, f64>> {
    let mut out = BTreeMap::new();
    for sweep in sweeps {
        if sweep.axis != SweepAxis::Coefficient {
            return Err(Error::Precondition(
                "activation success needs coefficient sweeps".into(),
            ));
        }
        let mean_at = |alpha: f64| -> Result<f64> {
            sweep
                .points
                .iter()
                .find(|p| p.axis_value == alpha)
                .and_then(|p| p.mean_score)
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "sweep for {} lacks a defined mean at alpha {alpha}",
                        sweep.trait_id.slug()
                    ))
                })
        };
        let delta = mean_at(1.0)? - mean_at(0.0)?;
        out.insert(sweep.trait_id, delta);
    }
    Ok(out)
}

/// Pairwise cosine similarities of all ten pole vectors, in
/// [`TraitPole::ALL`] order. Symmetric by construction; diagonal is the
/// self-similarity of each vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineMatrix {
    pub order: Vec<TraitPole>,
    pub values: Vec<Vec<f64>>,
}

impl CosineMatrix {
    pub fn get(&self, a: TraitPole, b: TraitPole) -> Option<f64> {
        let i = self.order.iter().position(|&p| p == a)?;
        let j = self.order.iter().position(|&p| p == b)?;
        Some(self.values[i][j])
    }
}

/// Cosine similarity matrix over a complete library.
pub fn cosine_matrix(library: &VectorLibrary) -> Result<CosineMatrix> {
    if !library.is_complete() {
        return Err(Error::Precondition(format!(
            "cosine matrix needs a complete library, found {} of 10 poles",
            library.len()
        )));
    }
    let order: Vec<TraitPole> = TraitPole::ALL.to_vec();
    let vectors: Vec<&Vec<f32>> = order
        .iter()
        .map(|&p| Ok(&library.require(p)?.vector))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = vectors
        .iter()
        .map(|v| {
            v.iter()
                .map(|&x| f64::from(x) * f64::from(x))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    if norms.contains(&0.0) {
        return Err(Error::ZeroNorm);
    }
    let n = order.len();
    let mut values = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = vectors[i]
                .iter()
                .zip(vectors[j].iter())
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            let cos = dot / (norms[i] * norms[j]);
            values[i][j] = cos;
            values[j][i] = cos;
        }
    }
    Ok(CosineMatrix { order, values })
}
