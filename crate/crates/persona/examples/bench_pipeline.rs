// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end benchmark: scripted five-stage generation (personas, arcs,
//! scenarios, styles), the steered-vs-vanilla run protocol on the toy model,
//! pairwise judging, and win-rate aggregation with a rendered table.
//!
//! Everything is offline: the generator and judge are scripted transports.
//!
//! Run with: cargo run -p persona --example bench_pipeline

use std::path::PathBuf;

use persona::bench::{
    gen_personas, gen_session, run_benchmark, save_sessions, BenchGenConfig,
};
use persona::flow::{FlowConfig, PredictorSource};
use persona::gateway::toy::{ToyCausalLm, ToyConfig};
use persona::judge::{Criterion, JudgeClient, JudgeConfig, ScriptedTransport, TransportRequest};
use persona::report::{render_win_rates, write_timing_csv};
use persona::synthetic::deterministic_library;

fn scripted_generator() -> persona::Result<JudgeClient> {
    let persona_json = |name: &str, role: &str| {
        serde_json::json!({
            "name": name,
            "role": role,
            "background": format!("{name} has a packed week"),
            "system_prompt": format!("You are {name}, a {role}."),
            "behavioral_tendencies": ["direct under pressure", "dry humor", "keeps promises"],
        })
    };
    let transport = ScriptedTransport::new(move |req: &TransportRequest| {
        let p = &req.user;
        if p.starts_with("Generate 2 diverse Core Personas") {
            Ok(serde_json::json!({"personas": [
                persona_json("Ana Obi", "Night-Shift Nurse"),
                persona_json("Ben Cole", "Neighborhood Baker"),
            ]})
            .to_string())
        } else if p.starts_with("Create a Dialogue Arc") {
            Ok(serde_json::json!({
                "persona_name": if p.contains("Ana") { "Ana Obi" } else { "Ben Cole" },
                "arc_description": "a rough stretch that turns around",
                "total_turns": 3,
                "emotional_progression": ["stressed", "frustrated", "relieved"],
            })
            .to_string())
        } else if p.starts_with("Create 3 Scenario Snippets") {
            let scenario = |n: usize, emotion: &str| {
                serde_json::json!({
                    "turn_number": n,
                    "model_input": format!("Turn {n}: a colleague needs something urgent. Respond in character."),
                    "context": format!("shift context {n}"),
                    "expected_emotion": emotion,
                    "scenario_description": format!("situation {n}"),
                })
            };
            Ok(serde_json::json!({"scenarios": [
                scenario(1, "stressed"),
                scenario(2, "frustrated"),
                scenario(3, "relieved"),
            ]})
            .to_string())
        } else if p.starts_with("Analyze this dialogue turn") {
            Ok(serde_json::json!({"expected_response_style": "clipped, candid, kind underneath"})
                .to_string())
        } else {
            Err(persona::judge::TransportError::fatal("unexpected prompt"))
        }
    });
    JudgeClient::new(JudgeConfig::default(), Box::new(transport))
}

fn scripted_pairwise_judge() -> persona::Result<JudgeClient> {
    // Deterministic preference keyed on the prompt hash, so both A and B win
    // sometimes and the table is non-degenerate.
    let transport = ScriptedTransport::new(|req: &TransportRequest| {
        let pick = |salt: usize| {
            let h = req
                .user
                .bytes()
                .fold(salt as u64, |a, b| a.wrapping_mul(31).wrapping_add(b as u64));
            if h % 3 == 0 {
                "B"
            } else {
                "A"
            }
        };
        Ok(serde_json::json!({
            "trait_adherence": pick(1),
            "role_consistency": pick(2),
            "response_appropriateness": pick(3),
            "insightfulness": pick(4),
            "overall": pick(5),
            "reasoning": "keyed deterministic preference",
        })
        .to_string())
    });
    JudgeClient::new(JudgeConfig::default(), Box::new(transport))
}

fn main() -> persona::Result<()> {
    let generator = scripted_generator()?;
    let gen_config = BenchGenConfig::default();
    let personas = gen_personas(&generator, 2, &[], &gen_config)?;
    let sessions: Vec<_> = personas
        .iter()
        .map(|p| gen_session(&generator, p, 3, &gen_config))
        .collect::<persona::Result<_>>()?;
    let out = PathBuf::from("target/example-out/bench_pipeline");
    let index = save_sessions(&sessions, "scripted-generator", 42, &out.join("sessions"))?;
    println!("sessions: {}", index.display());

    let mut gateway = ToyCausalLm::new(ToyConfig {
        hidden_dim: 16,
        num_layers: 4,
        ..ToyConfig::default()
    });
    let library = deterministic_library("toy-causal-d16-l4-v256-s0", 2, 16);
    let judge = scripted_pairwise_judge()?;
    let analyst = |_: &str| {
        "Extraversion: 1.0\nAgreeableness: 0.5\nConscientiousness: -0.5\nNeuroticism: 0\nOpenness: 0"
            .to_string()
    };
    let report = run_benchmark(
        &mut gateway,
        &PredictorSource::Scripted(&analyst),
        &library,
        &FlowConfig::default(),
        &sessions,
        &judge,
    )?;

    println!("\nwin rates over {} comparisons:", report.outcomes.len());
    for criterion in Criterion::ALL {
        let m = report.rates.get(criterion);
        match m.rate {
            Some(rate) => println!(
                "  {:<8} {:>5.1}%  ({} wins / {} judged)",
                criterion.short_name(),
                rate * 100.0,
                m.wins,
                m.wins + m.losses
            ),
            None => println!("  {:<8} no judged comparisons", criterion.short_name()),
        }
    }
    println!(
        "\ntiming: steered {:.2}s total ({:.3}s per response), vanilla {:.2}s ({:.3}s)",
        report.timing.steered_total_s,
        report.timing.steered_per_response_s,
        report.timing.vanilla_total_s,
        report.timing.vanilla_per_response_s,
    );

    let rendered = render_win_rates(&report.rates, &out, "win_rates")?;
    let timing = write_timing_csv(&report, &out, "timing")?;
    println!("\ntable: {}", rendered.image.display());
    println!("csv:   {}", rendered.csv.display());
    println!("timing csv: {}", timing.display());
    Ok(())
}
