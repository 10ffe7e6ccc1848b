// SPDX-License-Identifier: MIT OR Apache-2.0

//! Orthogonality analysis: pairwise cosine similarities across the ten pole
//! vectors, rendered as a heatmap plus a CSV with identical numbers.
//!
//! Run with: cargo run -p persona --example cosine_heatmap

use std::path::PathBuf;

use persona::extraction::cosine_matrix;
use persona::report::render_cosine;
use persona::synthetic::deterministic_library;
use persona::{Polarity, TraitPole};

fn main() -> persona::Result<()> {
    let library = deterministic_library("demo-model", 20, 96);
    let matrix = cosine_matrix(&library)?;

    println!("diagonal (self-similarity):");
    for pole in TraitPole::ALL {
        let v = matrix.get(pole, pole).unwrap();
        println!("  {:<16} {v:+.6}", pole.slug());
    }

    println!("\nopposing poles:");
    for pole in TraitPole::ALL {
        if pole.polarity() == Polarity::High {
            let sim = matrix.get(pole, pole.opposite()).unwrap();
            println!("  {:<16} vs {:<16} {sim:+.4}", pole.slug(), pole.opposite().slug());
        }
    }

    let out = PathBuf::from("target/example-out/cosine_heatmap");
    let rendered = render_cosine(&matrix, &out, "cosine")?;
    println!("\nheatmap: {}", rendered.image.display());
    println!("csv:     {}", rendered.csv.display());
    Ok(())
}
