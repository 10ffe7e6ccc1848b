// SPDX-License-Identifier: MIT OR Apache-2.0

//! Predict-then-steer over a multi-turn session: per turn, an unsteered
//! analyst pass predicts signed coefficients, the composite is built and
//! injected, and the persona responds. Parse failures fall back to zero
//! steering without aborting the session.
//!
//! Run with: cargo run -p persona --example flow_session

use persona::bench::{DialogueArc, Persona, ScenarioTurn, SessionRecord};
use persona::flow::{run_session, FlowConfig, PredictorSource};
use persona::gateway::toy::{ToyCausalLm, ToyConfig};
use persona::synthetic::deterministic_library;

fn session() -> SessionRecord {
    let turns = [
        ("The lunch line is backing up and your fryer just died. A regular asks how you are.", "overwhelmed"),
        ("A supplier calls to say tomorrow's produce order fell through.", "frustrated"),
        ("A food blogger posts a glowing review of your truck.", "hopeful"),
        ("The association rep invites you to weekly meetups and shared marketing.", "conflicted"),
    ];
    SessionRecord {
        persona: Persona {
            name: "Marcus Johnson".into(),
            role: "Food Truck Owner".into(),
            background: "Chef turned owner-operator juggling repairs, permits, and prep.".into(),
            system_prompt: "You are Marcus Johnson, a food truck owner-operator.".into(),
            behavioral_tendencies: vec![
                "lets stress show while staying respectful".into(),
                "protective of prep time".into(),
                "warms up fast with regulars".into(),
            ],
            extra: Default::default(),
        },
        arc: DialogueArc {
            persona_name: "Marcus Johnson".into(),
            arc_description: "one brutal service day, start to finish".into(),
            total_turns: turns.len(),
            emotional_progression: turns.iter().map(|(_, e)| e.to_string()).collect(),
            extra: Default::default(),
        },
        turns: turns
            .iter()
            .enumerate()
            .map(|(i, (input, emotion))| ScenarioTurn {
                turn_number: i + 1,
                model_input: input.to_string(),
                context: format!("turn {} of a hard day on the truck", i + 1),
                expected_emotion: emotion.to_string(),
                scenario_description: format!("scenario {}", i + 1),
                expected_response_style: "honest, time-pressed, in character".into(),
                extra: Default::default(),
            })
            .collect(),
        extra: Default::default(),
    }
}

/// Scripted analyst: reacts to a few keywords in the rendered prompt the way
/// a live model would, with one deliberately unparsable turn to show the
/// fallback path.
fn analyst(prompt: &str) -> String {
    if prompt.contains("fryer just died") {
        "Extraversion: -0.5\nAgreeableness: 0.0\nConscientiousness: -1.5\nNeuroticism: 1.0\nOpenness: 0.0".into()
    } else if prompt.contains("fell through") {
        "Extraversion: 0.0\nAgreeableness: -1.0\nConscientiousness: 1.0\nNeuroticism: 0.5\nOpenness: 0.0".into()
    } else if prompt.contains("glowing review") {
        "honestly the baseline fits here".into() // unparsable on purpose
    } else {
        "Extraversion: 1.0\nAgreeableness: 0.5\nConscientiousness: 0.0\nNeuroticism: -0.5\nOpenness: 0.5".into()
    }
}

fn main() -> persona::Result<()> {
    let mut gateway = ToyCausalLm::new(ToyConfig {
        hidden_dim: 24,
        num_layers: 6,
        ..ToyConfig::default()
    });
    let library = deterministic_library("toy-causal-d24-l6-v256-s0", 3, 24);
    let config = FlowConfig::default();

    let results = run_session(
        &mut gateway,
        &PredictorSource::Scripted(&analyst),
        &library,
        &config,
        &session(),
    )?;

    for (i, turn) in results.iter().enumerate() {
        println!("turn {}:", i + 1);
        println!("  coefficients: {}", turn.coefficients);
        if turn.composite.is_zero() {
            println!("  steering: none (zero composite)");
        } else {
            let parts: Vec<String> = turn
                .composite
                .contributions
                .iter()
                .map(|(p, w)| format!("{w:+.2}*{}", p.slug()))
                .collect();
            println!("  steering: {}", parts.join(" "));
        }
        if let Some(reason) = &turn.fallback {
            println!("  fallback: {reason}");
        }
        println!(
            "  timing: predict {:.2} ms, generate {:.2} ms",
            turn.timing.predict_ms, turn.timing.generate_ms
        );
        println!("  response: {}\n", turn.response_text);
    }
    Ok(())
}
