// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gateway basics: seeded generation, residual capture, and steering.
//!
//! Run with: cargo run -p persona --example steer_and_capture

use persona::gateway::toy::{ToyCausalLm, ToyConfig};
use persona::gateway::{ChatMessage, GenerationRequest, ModelGateway, SamplingParams, SteeringSpec};

fn main() -> persona::Result<()> {
    let mut model = ToyCausalLm::new(ToyConfig::default());
    let descriptor = model.describe()?;
    println!(
        "model {} (d={}, L={})",
        descriptor.model_id, descriptor.hidden_dim, descriptor.num_layers
    );

    let request = GenerationRequest {
        system_prompt: Some("You are a cheerful assistant.".into()),
        messages: vec![ChatMessage::user("tell me about your morning")],
        sampling: SamplingParams {
            temperature: 1.0,
            top_p: 0.9,
            max_new_tokens: 12,
        },
        seed: 7,
    };

    // Seeded generation is reproducible.
    let first = model.generate(&request)?;
    let second = model.generate(&request)?;
    assert_eq!(first, second);
    println!("\nvanilla ({} tokens): {}", first.token_count, first.text);

    // Capture the residual stream at layer 2 while generating.
    let (generation, trace) = model.generate_with_capture(&request, 2)?;
    println!(
        "captured {} vectors of width {} at layer {}",
        trace.positions.len(),
        trace.positions[0].len(),
        trace.layer
    );
    assert_eq!(trace.positions.len(), generation.token_count);

    // Steering with the zero vector is a no-op, byte for byte.
    let zero = SteeringSpec::single(2, vec![0.0; descriptor.hidden_dim]);
    let unsteered = model.generate_with_steering(&request, &zero)?;
    assert_eq!(unsteered.text, first.text);
    println!("zero-vector steering reproduces the vanilla output");

    // A genuine direction changes the sampled continuation.
    let direction: Vec<f32> = (0..descriptor.hidden_dim)
        .map(|i| (i as f32 * 0.31).sin() * 2.0)
        .collect();
    let steered = model.generate_with_steering(&request, &SteeringSpec::single(2, direction))?;
    println!("steered: {}", steered.text);
    assert_ne!(steered.text, first.text);

    Ok(())
}
