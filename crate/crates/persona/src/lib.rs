// SPDX-License-Identifier: MIT OR Apache-2.0

//! Persona steering toolkit.
//!
//! Extract personality-trait directions from a causal LM's residual stream,
//! compose them algebraically, steer generation with them (statically or via
//! a per-turn predict-then-steer loop), and evaluate the result with
//! LLM-judge harnesses and a multi-turn benchmark pipeline.
//!
//! ## Where to start
//!
//! The runnable examples are the primary interface; each exercises one
//! capability end to end on the built-in deterministic backend, no network
//! required:
//!
//! ```bash
//! cargo run -p persona --example steer_and_capture   # gateway: generate/capture/steer
//! cargo run -p persona --example extract_library     # contrastive vector extraction
//! cargo run -p persona --example compose_vectors     # clip/gate/pole-select/normalize/sum
//! cargo run -p persona --example coefficient_sweep   # judged steering sweeps
//! cargo run -p persona --example cosine_heatmap      # orthogonality analysis + heatmap
//! cargo run -p persona --example vector_arithmetic   # recipe-driven add/subtract validation
//! cargo run -p persona --example bfi_linearity       # coefficient-vs-score linear fits
//! cargo run -p persona --example causal_probes       # independence grid + composition probe
//! cargo run -p persona --example flow_session        # predict-then-steer multi-turn loop
//! cargo run -p persona --example bench_pipeline      # benchmark gen/run/aggregate/render
//! cargo run -p persona --example leakage_check       # prompt/scenario similarity audit
//! ```
//!
//! A thin `persona` binary wraps the same pipelines as subcommands
//! (`extract`, `sweep-layers`, `sweep-coeff`, `ortho`, `compose`, `vectors`,
//! `bfi`, `probe`, `flow run`, `bench gen/run/report`, `leakage`).
//!
//! ## Module map
//!
//! - [`gateway`] — backend contract: generation, residual capture, residual
//!   injection; the deterministic [`gateway::toy`] backend and an HTTP
//!   remote backend.
//! - [`store`] — bit-exact persona-vector persistence with checksums.
//! - [`extraction`] — contrastive extraction, layer/coefficient sweeps,
//!   activation-success deltas, cosine analysis.
//! - [`algebra`] — coefficient sets and the clip → gate → pole-select →
//!   normalize → sum composition pipeline.
//! - [`bfi`] — scenario-based questionnaire evaluation, linear fits,
//!   arithmetic recipes, independence probes.
//! - [`flow`] — the per-turn predict-then-steer controller.
//! - [`judge`] — cached, rate-limited judge/generator client with the
//!   0-100, Likert, and pairwise rubrics.
//! - [`bench`] — five-stage benchmark generation, the steered-vs-vanilla
//!   run protocol, win-rate aggregation, leakage checks.
//! - [`report`]/[`plot`] — CSV + PNG emission where every plotted number is
//!   also in the sibling CSV.
//! - [`config`]/[`cli`] — layered run configuration, manifests, dispatch.

pub mod algebra;
pub mod bench;
pub mod bfi;
pub mod cli;
pub mod config;
pub mod error;
pub mod extraction;
pub mod flow;
pub mod gateway;
pub mod judge;
pub mod ocean;
pub mod plot;
pub mod report;
pub mod seeds;
pub mod store;
pub mod synthetic;

#[cfg(feature = "http")]
pub mod net;

pub use error::{Error, Result};
pub use ocean::{Dimension, Polarity, TraitPole};

pub use algebra::{CoefficientSet, ComposeConfig, CompositeVector};
pub use gateway::{
    ActivationTrace, GenerationRequest, ModelDescriptor, ModelGateway, SteeringSpec,
};
pub use store::{PersonaVector, VectorLibrary};
