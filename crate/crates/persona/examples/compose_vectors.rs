// SPDX-License-Identifier: MIT OR Apache-2.0

//! Coefficient pipeline walkthrough: binning, clipping, gating, pole
//! selection, normalization, and the composite sum, including the
//! conflicting-traits case and the saved .pvec composite.
//!
//! Run with: cargo run -p persona --example compose_vectors

use std::path::PathBuf;

use persona::algebra::{bin, clip, compose, gate, select_pole, Binning, CoefficientSet, ComposeConfig};
use persona::ocean::Dimension;
use persona::store::{save_vector_file, Normalization, VectorFile, VectorLabel};
use persona::synthetic::deterministic_library;

fn main() -> persona::Result<()> {
    let library = deterministic_library("demo-model", 20, 64);

    // A prediction with an out-of-range openness value and one weak signal.
    let raw = CoefficientSet::zero()
        .with(Dimension::Openness, 2.8)
        .with(Dimension::Extraversion, -1.2)
        .with(Dimension::Agreeableness, 0.3);
    println!("raw:     {raw}");
    println!("binned:  {}", bin(raw, Binning::Bins9));
    let clipped = clip(raw, 2.0);
    println!("clipped: {clipped}");
    let gated = gate(clipped, 0.5);
    println!("gated:   {gated} (weak A dropped, boundary values kept)");
    for dimension in Dimension::ALL {
        let alpha = gated.get(dimension);
        if alpha != 0.0 {
            println!(
                "  {} -> pole {} with weight {:.2}",
                dimension.code(),
                select_pole(dimension, alpha).slug(),
                alpha.abs()
            );
        }
    }

    let composite = compose(raw, &library, &ComposeConfig::default())?;
    println!("\ncomposite contributions:");
    for (pole, weight) in &composite.contributions {
        println!("  {weight:+.2} * unit({})", pole.slug());
    }

    // The conflicting-traits configuration: boost conscientiousness while
    // suppressing extraversion and agreeableness.
    let conflict = CoefficientSet::zero()
        .with(Dimension::Conscientiousness, 1.0)
        .with(Dimension::Extraversion, -1.0)
        .with(Dimension::Agreeableness, -0.5);
    let resolved = compose(conflict, &library, &ComposeConfig::default())?;
    println!("\nconflict case {conflict}:");
    for (pole, weight) in &resolved.contributions {
        println!("  {weight:+.2} * unit({})", pole.slug());
    }

    let out = PathBuf::from("target/example-out/compose_vectors");
    std::fs::create_dir_all(&out).ok();
    let path = out.join("composite.pvec");
    save_vector_file(
        &path,
        &VectorFile {
            label: VectorLabel::Composite,
            layer: resolved.layer,
            model_id: library.model_id.clone(),
            normalization: Normalization::Raw,
            values: resolved.vector.clone(),
        },
    )?;
    println!("\ncomposite saved: {}", path.display());
    Ok(())
}
