// SPDX-License-Identifier: MIT OR Apache-2.0

//! Causal-independence grid and cross-dimensional composition probe against
//! the planted ground truth: holding one pole fixed while sweeping another
//! moves only the swept trait, and secondary effects superpose linearly.
//!
//! Run with: cargo run -p persona --example causal_probes

use std::path::PathBuf;

use persona::bfi::{causal_independence_grid, cross_dimension_probe, BfiConfig, EvalAssets};
use persona::judge::{JudgeClient, JudgeConfig};
use persona::report::{write_cross_csv, write_grid_csv};
use persona::synthetic::{basis_library, planted_rubric, EchoVectorGateway, PlantedTraitJudge};
use persona::TraitPole;

fn assets(pole: TraitPole) -> EvalAssets {
    EvalAssets {
        questions: vec![format!("How would you handle a {} moment?", pole.slug())],
        rubric: planted_rubric(pole),
    }
}

fn main() -> persona::Result<()> {
    let mut gateway = EchoVectorGateway::new("echo", 4);
    let judge = JudgeClient::new(JudgeConfig::default(), Box::new(PlantedTraitJudge))?;
    let libraries = vec![basis_library("echo", 1), basis_library("echo", 2)];
    let config = BfiConfig {
        repeats: 3,
        ..BfiConfig::default()
    };

    let grid = causal_independence_grid(
        &mut gateway,
        &judge,
        &libraries,
        (TraitPole::Outgoing, 1.0),
        (TraitPole::Compassionate, &[-1.0, 0.0, 1.0, 2.0]),
        &assets(TraitPole::Outgoing),
        &assets(TraitPole::Compassionate),
        &config,
    )?;
    println!("layer  swept_a   E score    A score    dE      dA");
    for row in &grid.rows {
        println!(
            "{:>5}  {:>7.1}  {:>7.2}    {:>7.2}  {:>6.2}  {:>6.2}",
            row.layer,
            row.swept_alpha,
            row.fixed_score.mean,
            row.swept_score.mean,
            row.delta_fixed,
            row.delta_swept,
        );
    }

    let probe = cross_dimension_probe(
        &mut gateway,
        &judge,
        &libraries[0],
        TraitPole::Nervous,
        TraitPole::Careless,
        &[-1.0, 0.0, 1.0, 2.0],
        &assets(TraitPole::Nervous),
        &assets(TraitPole::Careless),
        &config,
    )?;
    println!("\ncomposition check on {}:", probe.secondary.slug());
    let c = &probe.composition;
    println!("  baseline           {:.2}", c.baseline);
    println!("  primary only       {:.2}", c.a_only);
    println!("  secondary only     {:.2}", c.b_only);
    println!("  combined observed  {:.2}", c.combined_observed);
    println!("  combined expected  {:.2}", c.combined_expected);
    println!("  superposition      {}", if c.met { "met" } else { "UNMET" });

    let out = PathBuf::from("target/example-out/causal_probes");
    let grid_csv = write_grid_csv(&grid, &out, "grid")?;
    let cross_csv = write_cross_csv(&probe, &out, "cross")?;
    println!("\ngrid csv:  {}", grid_csv.display());
    println!("cross csv: {}", cross_csv.display());
    Ok(())
}
