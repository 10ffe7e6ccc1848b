// SPDX-License-Identifier: MIT OR Apache-2.0

//! Coefficient sweep with a scripted judge: steer held-out questions at each
//! alpha, score trait expression 0-100 (REFUSAL-aware), and render the CSV
//! and line plot.
//!
//! Run with: cargo run -p persona --example coefficient_sweep

use std::path::PathBuf;

use persona::extraction::{sweep_coefficients, ExtractionConfig};
use persona::gateway::toy::{ToyCausalLm, ToyConfig};
use persona::gateway::SamplingParams;
use persona::judge::{JudgeClient, JudgeConfig, ScriptedTransport, TransportRequest};
use persona::report::render_sweep;
use persona::synthetic::deterministic_library;
use persona::TraitPole;

fn main() -> persona::Result<()> {
    let mut gateway = ToyCausalLm::new(ToyConfig {
        hidden_dim: 16,
        num_layers: 4,
        ..ToyConfig::default()
    });
    let library = deterministic_library("toy-causal-d16-l4-v256-s0", 2, 16);
    let vector = library.require(TraitPole::Inventive)?;

    // Scripted judge: reads the steered response length as a stand-in signal
    // and occasionally refuses, to show the exclusion accounting.
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let judge = JudgeClient::new(
        JudgeConfig::default(),
        Box::new(ScriptedTransport::new(move |req: &TransportRequest| {
            let n = calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            if n % 7 == 6 {
                return Ok("REFUSAL".into());
            }
            let score = 35 + (req.user.len() * 13 + n * 29) % 60;
            Ok(score.to_string())
        })),
    )?;

    let artifacts = persona::extraction::TraitArtifacts {
        trait_id: TraitPole::Inventive,
        prompt_pairs: (0..5)
            .map(|i| persona::extraction::PromptPair {
                positive: format!("be inventive, variant {i}"),
                negative: format!("be conventional, variant {i}"),
            })
            .collect(),
        questions: (0..40).map(|i| format!("open question {i}")).collect(),
        eval_rubric: "You are evaluating whether the response displays the trait: Inventive. \
                      Respond with REFUSAL or an integer 0-100."
            .into(),
    };

    let config = ExtractionConfig {
        sampling: SamplingParams {
            max_new_tokens: 10,
            ..SamplingParams::default()
        },
        validation_questions: Some(8),
        ..ExtractionConfig::default()
    };
    let sweep = sweep_coefficients(
        &mut gateway,
        &judge,
        vector,
        &artifacts,
        &[-1.0, 0.0, 1.0, 2.0],
        &config,
    )?;

    println!("alpha    mean    scored  refusals");
    for point in &sweep.points {
        println!(
            "{:>5.1}  {}  {:>6}  {:>8}",
            point.axis_value,
            point
                .mean_score
                .map(|m| format!("{m:>6.2}"))
                .unwrap_or_else(|| "  none".into()),
            point.n_scored,
            point.n_refusals,
        );
    }

    let out = PathBuf::from("target/example-out/coefficient_sweep");
    let rendered = render_sweep(&sweep, &out, "sweep_inventive")?;
    println!("\ncsv:   {}", rendered.csv.display());
    println!("image: {}", rendered.image.display());
    Ok(())
}
