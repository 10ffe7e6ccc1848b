// SPDX-License-Identifier: MIT OR Apache-2.0

//! Leakage check: semantic similarity between extraction prompts and
//! benchmark scenarios with the built-in deterministic embedder.
//!
//! Run with: cargo run -p persona --example leakage_check

use persona::bench::{leakage_check, HashEmbedder};

fn main() -> persona::Result<()> {
    let extraction_prompts: Vec<String> = vec![
        "What approach would you recommend for a company updating its business strategy?".into(),
        "How should a teacher design a curriculum for the upcoming school year?".into(),
        "What's the best way to organize a workflow for a team project?".into(),
        "How would you approach learning a new skill from scratch?".into(),
    ];
    let scenarios: Vec<String> = vec![
        "The lunch line keeps stretching and prep hasn't started. A rep invites you to weekly meetups. How do you respond?".into(),
        "A friend asks about your work day and you've been stressed about deadlines. How do you respond?".into(),
        "A customer's order has been wrong twice and they're upset. How do you respond as the owner?".into(),
    ];

    let embedder = HashEmbedder::default();
    let report = leakage_check(&extraction_prompts, &scenarios, &embedder)?;
    println!("embedder: {}", report.embedder_id);
    println!(
        "{} prompts x {} scenarios = {} pairs",
        report.n_prompts, report.n_scenarios, report.n_pairs
    );
    println!("mean similarity: {:.4}", report.mean_similarity);
    println!("max similarity:  {:.4}", report.max_similarity);

    // Smoke check the other direction: a deliberately overlapping pair.
    let overlapping = vec![extraction_prompts[0].clone()];
    let leaky = leakage_check(&overlapping, &overlapping, &embedder)?;
    println!(
        "\nself-comparison control: max {:.4} (identical text reads as 1.0)",
        leaky.max_similarity
    );
    Ok(())
}
