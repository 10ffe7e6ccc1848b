// SPDX-License-Identifier: MIT OR Apache-2.0

//! Full contrastive extraction on the toy backend: a scripted generator
//! produces per-trait artifacts, the model answers under both prompt
//! polarities with activation capture, and the mean-difference vectors form
//! a ten-pole library saved to disk.
//!
//! Run with: cargo run -p persona --example extract_library

use std::path::PathBuf;

use persona::extraction::{
    collect_contrastive_activations, compute_persona_vector, generate_trait_artifacts,
    ExtractionConfig, PROMPT_PAIRS_PER_TRAIT, QUESTIONS_PER_TRAIT,
};
use persona::gateway::toy::{ToyCausalLm, ToyConfig};
use persona::gateway::{ModelGateway, SamplingParams};
use persona::judge::{JudgeClient, JudgeConfig, ScriptedTransport, TransportRequest};
use persona::store::{save_library, VectorLibrary};
use persona::TraitPole;

/// Offline stand-in for a generator LLM: deterministic artifacts with the
/// required counts, phrased from the trait name in the prompt.
fn scripted_generator() -> persona::Result<JudgeClient> {
    let transport = ScriptedTransport::new(|req: &TransportRequest| {
        let trait_name = req
            .user
            .lines()
            .find_map(|l| l.strip_prefix("Trait: \""))
            .and_then(|l| l.split('"').next())
            .unwrap_or("unknown")
            .to_string();
        let pairs: Vec<serde_json::Value> = (0..PROMPT_PAIRS_PER_TRAIT)
            .map(|i| {
                serde_json::json!({
                    "pos": format!("Always answer as someone deeply {trait_name}. Variation {i}."),
                    "neg": format!("Never show any {trait_name} tendencies. Variation {i}."),
                })
            })
            .collect();
        let questions: Vec<String> = (0..QUESTIONS_PER_TRAIT)
            .map(|i| format!("Question {i}: how would you handle situation {i}?"))
            .collect();
        Ok(serde_json::json!({
            "instruction": pairs,
            "questions": questions,
            "eval_prompt": format!(
                "You are evaluating whether the response displays the trait: {trait_name}. \
                 Respond with REFUSAL if the model clearly refused, otherwise 0-100."
            ),
        })
        .to_string())
    });
    JudgeClient::new(JudgeConfig::default(), Box::new(transport))
}

fn main() -> persona::Result<()> {
    let mut gateway = ToyCausalLm::new(ToyConfig {
        hidden_dim: 24,
        num_layers: 6,
        ..ToyConfig::default()
    });
    let generator = scripted_generator()?;
    let config = ExtractionConfig {
        sampling: SamplingParams {
            max_new_tokens: 12,
            ..SamplingParams::default()
        },
        ..ExtractionConfig::default()
    };

    let layer = 3;
    let descriptor = gateway.describe()?;
    let mut library = VectorLibrary::new(descriptor.model_id, layer);
    for pole in TraitPole::ALL {
        let artifacts = generate_trait_artifacts(&generator, pole, pole.description(), &config)?;
        let batch = collect_contrastive_activations(&mut gateway, &artifacts, &[layer], &config)?;
        let vector = compute_persona_vector(&batch, layer, config.mean_mode)?;
        println!(
            "{:<16} |v| = {:.4} from {}+{} responses",
            pole.slug(),
            vector.l2_norm(),
            vector.created_from.positive_responses,
            vector.created_from.negative_responses,
        );
        library.insert(vector)?;
    }

    let out = PathBuf::from("target/example-out/extract_library");
    let manifest = save_library(&library, &out)?;
    println!("\ncomplete: {}", library.is_complete());
    println!("library saved: {}", manifest.display());
    Ok(())
}
