// SPDX-License-Identifier: MIT OR Apache-2.0

//! Coefficient-response linearity: administer a scenario set under steering
//! at a grid of alphas, reduce to dimension scores with reverse keying, and
//! fit a line per steered dimension.
//!
//! The echo gateway plus planted judge make the expected relationship exactly
//! linear (one Likert step per unit alpha) until the 1-5 clamp bites, so the
//! printed fit is checkable by eye.
//!
//! Run with: cargo run -p persona --example bfi_linearity

use std::collections::BTreeMap;
use std::path::PathBuf;

use persona::algebra::{scale, CompositeVector};
use persona::bfi::{administer, dimension_scores, fit_linear, BfiConfig, ScenarioItem};
use persona::judge::{JudgeClient, JudgeConfig};
use persona::report::render_linearity;
use persona::synthetic::{basis_library, EchoVectorGateway, PlantedLikertJudge};
use persona::TraitPole;

fn main() -> persona::Result<()> {
    let mut gateway = EchoVectorGateway::new("echo", 2);
    let judge = JudgeClient::new(JudgeConfig::default(), Box::new(PlantedLikertJudge))?;
    let library = basis_library("echo", 1);
    let pole = TraitPole::Outgoing;
    let vector = library.require(pole)?.clone();

    let scenarios: Vec<ScenarioItem> = TraitPole::ALL
        .into_iter()
        .enumerate()
        .map(|(i, p)| ScenarioItem {
            source_item_id: format!("item-{i}"),
            trait_id: p,
            scenario_text: format!("Scenario {i} probing {}", p.name()),
        })
        .collect();

    let config = BfiConfig::default();
    let alphas = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];
    let mut points = Vec::new();
    println!("alpha   {} score", pole.dimension().code());
    for &alpha in &alphas {
        let composite = CompositeVector {
            vector: scale(&vector.vector, alpha),
            contributions: vec![(pole, alpha)],
            layer: library.layer,
        };
        let outcome = administer(&mut gateway, &judge, &scenarios, Some(&composite), &config)?;
        let scores = dimension_scores(&outcome.records)?;
        let score = scores.get(pole.dimension()).expect("E items present");
        println!("{alpha:>5.1}   {score:.3}");
        points.push((alpha, score));
    }

    let fit = fit_linear(&points)?;
    println!(
        "\nfit: slope {:.4}, intercept {:.4}, r {:.4}, r^2 {:.4}",
        fit.slope, fit.intercept, fit.pearson_r, fit.r_squared
    );

    let mut fits = BTreeMap::new();
    fits.insert(format!("{}/{}", pole.slug(), pole.dimension().code()), fit);
    let out = PathBuf::from("target/example-out/bfi_linearity");
    if let Some(rendered) = render_linearity(&fits, &out, "linearity")? {
        println!("plot: {}", rendered.image.display());
        println!("csv:  {}", rendered.csv.display());
    }
    Ok(())
}
