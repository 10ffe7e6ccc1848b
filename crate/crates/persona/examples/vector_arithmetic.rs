// SPDX-License-Identifier: MIT OR Apache-2.0

//! Vector-arithmetic validation with a planted ground truth: the echo
//! gateway reports whatever steering it receives, and the planted Likert
//! judge scores responses by that signal, so recipe expectations are checked
//! against an analytically known outcome.
//!
//! Run with: cargo run -p persona --example vector_arithmetic

use std::path::PathBuf;

use persona::bfi::{arithmetic_validation, parse_recipes, BfiConfig, ScenarioItem};
use persona::judge::{JudgeClient, JudgeConfig};
use persona::report::render_arithmetic;
use persona::synthetic::{basis_library, EchoVectorGateway, PlantedLikertJudge};
use persona::TraitPole;

fn main() -> persona::Result<()> {
    let mut gateway = EchoVectorGateway::new("echo", 2);
    let judge = JudgeClient::new(JudgeConfig::default(), Box::new(PlantedLikertJudge))?;
    let library = basis_library("echo", 1);

    let scenarios: Vec<ScenarioItem> = TraitPole::ALL
        .into_iter()
        .enumerate()
        .map(|(i, pole)| ScenarioItem {
            source_item_id: format!("item-{i}"),
            trait_id: pole,
            scenario_text: format!("Scenario {i}: a situation probing {}", pole.name()),
        })
        .collect();

    let recipes = parse_recipes(
        r#"
[[recipe]]
name = "outgoing_plus_compassionate"
expr = "outgoing + compassionate"
expect = { E = "up", A = "up" }

[[recipe]]
name = "outgoing_minus_solitary"
expr = "outgoing - solitary"
expect = { E = "up" }

[[recipe]]
name = "outgoing_minus_compassionate"
expr = "outgoing - compassionate"
expect = { E = "up", A = "down", N = "flat" }
"#,
    )?;

    let report = arithmetic_validation(
        &mut gateway,
        &judge,
        &library,
        &recipes,
        &scenarios,
        &BfiConfig::default(),
    )?;

    println!("baseline dimension scores:");
    for (dimension, score) in report.baseline.iter() {
        println!("  {:<18} {score:.2}", dimension.name());
    }
    for outcome in &report.recipes {
        println!("\n{} ({}):", outcome.name, outcome.expression);
        for check in &outcome.checks {
            println!(
                "  {:<18} {:?}  baseline {:.2} -> {:.2} (delta {:+.2})  {}",
                check.dimension.name(),
                check.expected,
                check.baseline,
                check.steered,
                check.delta,
                if check.met { "met" } else { "UNMET" }
            );
        }
    }

    let out = PathBuf::from("target/example-out/vector_arithmetic");
    if let Some(rendered) = render_arithmetic(&report, &out, "arithmetic")? {
        println!("\nbars: {}", rendered.image.display());
        println!("csv:  {}", rendered.csv.display());
    }
    Ok(())
}
