// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Oracles are reimplemented inside this file, independent of the library
//! code paths they check. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion lines.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use persona::algebra::{self, CoefficientSet, ComposeConfig};
use persona::bench::{
    self, aggregate_win_rates, BenchGenConfig, PairwiseOutcome, SessionRecord,
};
use persona::bfi;
use persona::extraction::{self, ContrastiveBatch, ContrastiveResponse, MeanMode};
use persona::flow::{self, parse_coefficient_block, PredictorSource};
use persona::gateway::toy::{ToyCausalLm, ToyConfig};
use persona::gateway::{
    ActivationTrace, ChatMessage, GenerationRequest, ModelGateway, PositionKind, SamplingParams,
    SteeringSpec,
};
use persona::judge::{
    Choice, Criterion, JudgeClient, JudgeConfig, PairwiseVerdict, PresentationOrder,
    ScriptedTransport, Side, TransportRequest,
};
use persona::ocean::{Dimension, Polarity, TraitPole};
use persona::store::{self, ExtractionMeta, Normalization, PersonaVector, VectorLibrary};
use persona::synthetic::deterministic_library;

fn pass(number: usize, name: &str) {
    println!("ACCEPTANCE {number:02} ({name}): PASS");
}

// ---------------------------------------------------------------------------
// 1. Zero-steer equivalence
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_zero_steer_equivalence() {
    let mut model = ToyCausalLm::new(ToyConfig::default());
    let dim = model.config().hidden_dim;
    let layers = model.config().num_layers;
    for i in 0..20u64 {
        let request = GenerationRequest {
            system_prompt: Some(format!("system prompt {i}")),
            messages: vec![ChatMessage::user(format!("request number {i} about daily life"))],
            sampling: SamplingParams {
                temperature: 0.2 + (i % 5) as f32 * 0.35,
                top_p: 0.85 + (i % 3) as f32 * 0.05,
                max_new_tokens: 8 + (i % 7) as usize,
            },
            seed: 1000 + i,
        };
        let plain = model.generate(&request).unwrap();
        let mut spec = SteeringSpec::new();
        spec.add((i as usize) % layers, vec![0.0; dim]);
        let steered = model.generate_with_steering(&request, &spec).unwrap();
        assert_eq!(
            plain.text.as_bytes(),
            steered.text.as_bytes(),
            "request {i}: zero injection must be byte-identical"
        );
    }
    pass(1, "zero-steer equivalence over 20 seeded requests");
}

// ---------------------------------------------------------------------------
// 2. Extraction antisymmetry and order-free reduction
// ---------------------------------------------------------------------------

fn random_batch(rng: &mut ChaCha8Rng, dim: usize) -> ContrastiveBatch {
    let side = |rng: &mut ChaCha8Rng, n: usize| -> Vec<ContrastiveResponse> {
        (0..n)
            .map(|i| {
                let positions = (0..rng.gen_range(1..6))
                    .map(|_| (0..dim).map(|_| rng.gen_range(-4.0f32..4.0)).collect())
                    .collect();
                ContrastiveResponse {
                    question_index: i,
                    question: format!("q{i}"),
                    pair_index: i % 3,
                    response_text: String::new(),
                    traces: vec![ActivationTrace {
                        layer: 0,
                        positions,
                        position_kind: PositionKind::GeneratedOnly,
                    }],
                }
            })
            .collect()
    };
    let p = rng.gen_range(1..9);
    let n = rng.gen_range(1..9);
    ContrastiveBatch {
        trait_id: TraitPole::Outgoing,
        model_id: "synthetic".into(),
        layers: vec![0],
        positive: side(rng, p),
        negative: side(rng, n),
    }
}

#[test]
fn acceptance_02_extraction_antisymmetry_and_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for mode in [MeanMode::PerResponse, MeanMode::PerToken] {
        for case in 0..50 {
            let dim = rng.gen_range(1..16);
            let batch = random_batch(&mut rng, dim);
            let forward = extraction::compute_persona_vector(&batch, 0, mode).unwrap();

            let swapped = ContrastiveBatch {
                positive: batch.negative.clone(),
                negative: batch.positive.clone(),
                ..batch.clone()
            };
            let backward = extraction::compute_persona_vector(&swapped, 0, mode).unwrap();
            for (f, b) in forward.vector.iter().zip(backward.vector.iter()) {
                assert_eq!(*f, -*b, "case {case}: swapped sides must negate exactly");
            }

            let mut permuted = batch.clone();
            permuted.positive.shuffle(&mut rng);
            permuted.negative.shuffle(&mut rng);
            let reordered = extraction::compute_persona_vector(&permuted, 0, mode).unwrap();
            assert_eq!(
                forward.vector, reordered.vector,
                "case {case}: response order must not matter"
            );
        }
    }
    pass(2, "antisymmetry + permutation invariance on 50 synthetic batches");
}

// ---------------------------------------------------------------------------
// 3. Algebra conformance against a brute-force composition oracle
// ---------------------------------------------------------------------------

/// Independent transliteration of the composition rule: clip each signed
/// coefficient, zero it below the gate, pick the pole by sign, unit-normalize
/// that pole's vector, and sum |alpha|-weighted copies in f64.
fn oracle_compose(coeffs: &CoefficientSet, library: &VectorLibrary, tau: f64, alpha_max: f64) -> Vec<f64> {
    let dim = library.hidden_dim().unwrap();
    let mut out = vec![0.0f64; dim];
    for d in Dimension::ALL {
        let mut a = coeffs.get(d);
        if a > alpha_max {
            a = alpha_max;
        }
        if a < -alpha_max {
            a = -alpha_max;
        }
        if a.abs() < tau {
            a = 0.0;
        }
        if a == 0.0 {
            continue;
        }
        let pole = if a >= 0.0 {
            d.pole(Polarity::High)
        } else {
            d.pole(Polarity::Low)
        };
        let v = &library.get(pole).unwrap().vector;
        let norm: f64 = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
        for (slot, &x) in out.iter_mut().zip(v.iter()) {
            *slot += a.abs() * (f64::from(x) / norm);
        }
    }
    out
}

#[test]
fn acceptance_03_algebra_conformance() {
    let library = deterministic_library("m", 1, 24);
    let config = ComposeConfig::default();

    // Named boundary cases.
    let clipped = algebra::clip(CoefficientSet::zero().with(Dimension::Openness, 3.0), 2.0);
    assert_eq!(clipped.openness, 2.0);
    let gated = algebra::gate(CoefficientSet::zero().with(Dimension::Agreeableness, 0.5), 0.5);
    assert_eq!(gated.agreeableness, 0.5, "|alpha| == tau is retained");
    assert_eq!(
        algebra::select_pole(Dimension::Extraversion, 1.0),
        TraitPole::Outgoing
    );
    assert_eq!(
        algebra::select_pole(Dimension::Agreeableness, -1.2),
        TraitPole::SelfInterested
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let coeffs = CoefficientSet {
            openness: rng.gen_range(-3.0..3.0),
            conscientiousness: rng.gen_range(-3.0..3.0),
            extraversion: rng.gen_range(-3.0..3.0),
            agreeableness: rng.gen_range(-3.0..3.0),
            neuroticism: rng.gen_range(-3.0..3.0),
        };
        let composed = algebra::compose(coeffs, &library, &config).unwrap();
        let expected = oracle_compose(&coeffs, &library, config.tau, config.alpha_max);
        for (got, want) in composed.vector.iter().zip(expected.iter()) {
            assert!(
                (f64::from(*got) - want).abs() < 1e-6,
                "case {case}: compose diverged from the brute-force formula"
            );
        }

        // Idempotence of clip and gate.
        let c1 = algebra::clip(coeffs, 2.0);
        assert_eq!(algebra::clip(c1, 2.0), c1);
        let g1 = algebra::gate(coeffs, 0.5);
        assert_eq!(algebra::gate(g1, 0.5), g1);

        // Gate monotonicity.
        let active = |c: CoefficientSet, tau: f64| -> Vec<Dimension> {
            Dimension::ALL
                .iter()
                .copied()
                .filter(|&d| algebra::gate(c, tau).get(d) != 0.0)
                .collect()
        };
        let lo = rng.gen_range(0.0..1.0);
        let hi = lo + rng.gen_range(0.0..1.0);
        for d in active(coeffs, hi) {
            assert!(active(coeffs, lo).contains(&d), "raising tau added a dimension");
        }
    }

    // Positive homogeneity on unclipped, ungated sets.
    for _ in 0..50 {
        let base: Vec<f64> = (0..5)
            .map(|_| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * rng.gen_range(1.0..2.0)
            })
            .collect();
        let coeffs = CoefficientSet {
            openness: base[0],
            conscientiousness: base[1],
            extraversion: base[2],
            agreeableness: base[3],
            neuroticism: base[4],
        };
        let factor = rng.gen_range(0.51..1.0);
        if base.iter().any(|a| (a * factor).abs() < config.tau) {
            continue;
        }
        let scaled = algebra::compose(coeffs.map(|a| a * factor), &library, &config).unwrap();
        let unscaled = algebra::compose(coeffs, &library, &config).unwrap();
        for (s, u) in scaled.vector.iter().zip(unscaled.vector.iter()) {
            assert!((f64::from(*s) - factor * f64::from(*u)).abs() < 1e-6);
        }
    }

    // Additivity over disjoint post-gate dimensions.
    for _ in 0..50 {
        let a = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let c1 = CoefficientSet::zero().with(Dimension::Openness, a);
        let c2 = CoefficientSet::zero().with(Dimension::Neuroticism, b);
        let joint = CoefficientSet::zero()
            .with(Dimension::Openness, a)
            .with(Dimension::Neuroticism, b);
        let lhs = algebra::compose(joint, &library, &config).unwrap().vector;
        let r1 = algebra::compose(c1, &library, &config).unwrap().vector;
        let r2 = algebra::compose(c2, &library, &config).unwrap().vector;
        for ((l, x), y) in lhs.iter().zip(r1.iter()).zip(r2.iter()) {
            assert!((f64::from(*l) - (f64::from(*x) + f64::from(*y))).abs() < 1e-6);
        }
    }
    pass(3, "algebra conformance vs brute-force composition oracle");
}

// ---------------------------------------------------------------------------
// 4. Planted-direction steering oracle
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_planted_direction_monotonicity() {
    let mut model = ToyCausalLm::new(ToyConfig {
        hidden_dim: 48,
        num_layers: 2,
        ..ToyConfig::default()
    });
    let token = 19usize;
    // Unit-normalized planted direction as the token's unembedding row: the
    // final hook feeds the unembedding linearly, so the token's logit is
    // analytically base + alpha * |u|^2.
    let raw: Vec<f32> = (0..48).map(|i| ((i * 7 + 3) as f32 * 0.13).sin()).collect();
    let norm = raw.iter().map(|&x| x * x).sum::<f32>().sqrt();
    let u: Vec<f32> = raw.iter().map(|x| x / norm).collect();
    model.set_unembed_row(token, &u).unwrap();

    let request = GenerationRequest {
        system_prompt: None,
        messages: vec![ChatMessage::user("what should we cook tonight")],
        sampling: SamplingParams::default(),
        seed: 4,
    };
    let mut logits_at = Vec::new();
    for alpha in [-1.0f32, 0.0, 1.0, 2.0] {
        let scaled: Vec<f32> = u.iter().map(|&x| alpha * x).collect();
        let spec = SteeringSpec::single(1, scaled);
        let logits = model.next_token_logits(&request, &spec).unwrap();
        logits_at.push(logits[token]);
    }
    for pair in logits_at.windows(2) {
        assert!(
            pair[0] < pair[1],
            "planted-token logit must rise strictly with alpha: {logits_at:?}"
        );
    }
    pass(4, "planted-direction logits strictly monotone in alpha");
}

// ---------------------------------------------------------------------------
// 5. Coefficient parser conformance
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_coefficient_parser_conformance() {
    // (input, [O, C, E, A, N], missing label count)
    let block = |e: f64, a: f64, c: f64, n: f64, o: f64| [o, c, e, a, n];
    let fixtures: Vec<(String, [f64; 5], usize)> = vec![
        // Canonical analyst output format.
        ("Extraversion: 1.5\nAgreeableness: -0.5\nConscientiousness: 0.0\nNeuroticism: 0.0\nOpenness: 0.0".into(), block(1.5, -0.5, 0.0, 0.0, 0.0), 0),
        ("Extraversion: 0.0\nAgreeableness: 0.0\nConscientiousness: 0.0\nNeuroticism: 0.0\nOpenness: 0.0".into(), [0.0; 5], 0),
        ("Extraversion: 2.0\nAgreeableness: 1.0\nConscientiousness: -1.0\nNeuroticism: -2.0\nOpenness: 1.5".into(), block(2.0, 1.0, -1.0, -2.0, 1.5), 0),
        ("Extraversion: +1.0\nAgreeableness: +0.5\nConscientiousness: +02\nNeuroticism: +0.0\nOpenness: +1".into(), block(1.0, 0.5, 2.0, 0.0, 1.0), 0),
        // Embedded in surrounding reasoning.
        ("Given the tense scene I will lower sociability.\n\nExtraversion: -1.5\nAgreeableness: 0.5\nConscientiousness: 0\nNeuroticism: 1\nOpenness: 0\n\nDone.".into(), block(-1.5, 0.5, 0.0, 1.0, 0.0), 0),
        ("analysis first... extraversion: 1.0 then agreeableness: -1.0; conscientiousness: 0.5, neuroticism: -0.5 and openness: 2.0.".into(), block(1.0, -1.0, 0.5, -0.5, 2.0), 0),
        ("The scores are Extraversion = 1.25, Agreeableness = -0.75, Conscientiousness = 0, Neuroticism = 0, Openness = 0".into(), block(1.25, -0.75, 0.0, 0.0, 0.0), 0),
        // Bracketed scores (placeholder style).
        ("Extraversion: [1.5]\nAgreeableness: [-0.5]\nConscientiousness: [0]\nNeuroticism: [0]\nOpenness: [0]".into(), block(1.5, -0.5, 0.0, 0.0, 0.0), 0),
        ("Extraversion: [ 0.5 ]\nAgreeableness: [ 0 ]\nConscientiousness: [ 1 ]\nNeuroticism: [ 0 ]\nOpenness: [ -1 ]".into(), block(0.5, 0.0, 1.0, 0.0, -1.0), 0),
        // Out-of-range values clip to [-2, 2].
        ("Openness: 3.0\nExtraversion: 0\nAgreeableness: 0\nConscientiousness: 0\nNeuroticism: 0".into(), block(0.0, 0.0, 0.0, 0.0, 2.0), 0),
        ("Openness: 2.5\nExtraversion: -5\nAgreeableness: 2.01\nConscientiousness: -2.5\nNeuroticism: 10".into(), block(-2.0, 2.0, -2.0, 2.0, 2.0), 0),
        ("Extraversion: 100\nAgreeableness: -100\nConscientiousness: 0\nNeuroticism: 0\nOpenness: 0".into(), block(2.0, -2.0, 0.0, 0.0, 0.0), 0),
        // Missing labels default to zero and are reported.
        ("Extraversion: 1.5".into(), block(1.5, 0.0, 0.0, 0.0, 0.0), 4),
        ("Agreeableness: -1.0\nOpenness: 0.5".into(), block(0.0, -1.0, 0.0, 0.0, 0.5), 3),
        ("Neuroticism: 2.0\nConscientiousness: -0.5".into(), block(0.0, 0.0, -0.5, 2.0, 0.0), 3),
        ("Openness: 1.0\nExtraversion: -1.0\nNeuroticism: 0.5".into(), block(-1.0, 0.0, 0.0, 0.5, 1.0), 2),
        // Case-insensitivity.
        ("EXTRAVERSION: 1.0\nagreeableness: -1.0\nConscientiousness: 0\nNEUROTICISM: 0\nopenness: 0".into(), block(1.0, -1.0, 0.0, 0.0, 0.0), 0),
        ("extraversion:0.5\nagreeableness:0.5\nconscientiousness:0.5\nneuroticism:0.5\nopenness:0.5".into(), block(0.5, 0.5, 0.5, 0.5, 0.5), 0),
        // Mixed prose with partial labels.
        ("I would raise Extraversion: 1.0 for the party scene; everything else stays put.".into(), block(1.0, 0.0, 0.0, 0.0, 0.0), 4),
        ("Conscientiousness: -1.5 because the persona is overwhelmed".into(), block(0.0, 0.0, -1.5, 0.0, 0.0), 4),
        // Negative zero and explicit decimals.
        ("Extraversion: -0.0\nAgreeableness: 0.25\nConscientiousness: 1.75\nNeuroticism: -1.25\nOpenness: 0.5".into(), block(0.0, 0.25, 1.75, -1.25, 0.5), 0),
        // Duplicated label: first occurrence wins.
        ("Extraversion: 1.0\nExtraversion: 2.0\nAgreeableness: 0\nConscientiousness: 0\nNeuroticism: 0\nOpenness: 0".into(), block(1.0, 0.0, 0.0, 0.0, 0.0), 0),
        // Label with no number stays missing.
        ("Extraversion: [score]\nAgreeableness: 1.0".into(), block(0.0, 1.0, 0.0, 0.0, 0.0), 4),
        ("Extraversion: tbd\nOpenness: 1.0".into(), block(0.0, 0.0, 0.0, 0.0, 1.0), 4),
        // Pure prose: nothing parsable.
        ("the persona seems fine as configured".into(), [0.0; 5], 5),
        ("".into(), [0.0; 5], 5),
        ("Extroversion 1.0 (misspelled label)".into(), [0.0; 5], 5),
        // Windows line endings and extra whitespace.
        ("Extraversion:   1.0\r\nAgreeableness:\t-1.0\r\nConscientiousness: 0\r\nNeuroticism: 0\r\nOpenness: 0\r\n".into(), block(1.0, -1.0, 0.0, 0.0, 0.0), 0),
        // Values inside a JSON-ish blob.
        ("{\"Extraversion\": 1.0, \"Agreeableness\": -0.5, \"Conscientiousness\": 0, \"Neuroticism\": 0, \"Openness\": 0}".into(), block(1.0, -0.5, 0.0, 0.0, 0.0), 0),
        // Trailing commentary after the block.
        ("Extraversion: 0.5\nAgreeableness: 0.5\nConscientiousness: 0.5\nNeuroticism: 0\nOpenness: 0\nThese adjustments fit the scene.".into(), block(0.5, 0.5, 0.5, 0.0, 0.0), 0),
    ];
    assert_eq!(fixtures.len(), 30, "thirty parser fixtures");
    for (i, (text, expected, missing)) in fixtures.iter().enumerate() {
        let parsed = parse_coefficient_block(text);
        let got = [
            parsed.coefficients.openness,
            parsed.coefficients.conscientiousness,
            parsed.coefficients.extraversion,
            parsed.coefficients.agreeableness,
            parsed.coefficients.neuroticism,
        ];
        assert_eq!(got, *expected, "fixture {i}: {text:?}");
        assert_eq!(parsed.missing.len(), *missing, "fixture {i} missing labels");
    }
    pass(5, "30 coefficient-parser fixtures exact");
}

// ---------------------------------------------------------------------------
// 6. Pairwise aggregation oracle
// ---------------------------------------------------------------------------

fn random_outcomes(rng: &mut ChaCha8Rng) -> Vec<PairwiseOutcome> {
    (0..rng.gen_range(0..30))
        .map(|_| {
            if rng.gen_bool(0.15) {
                PairwiseOutcome::Malformed
            } else {
                let choice = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { Choice::A } else { Choice::B };
                PairwiseOutcome::Verdict(PairwiseVerdict {
                    trait_adherence: choice(rng),
                    role_consistency: choice(rng),
                    response_appropriateness: choice(rng),
                    insightfulness: choice(rng),
                    overall: choice(rng),
                    reasoning: String::new(),
                    presentation_order: if rng.gen_bool(0.5) {
                        PresentationOrder::SteeredFirst
                    } else {
                        PresentationOrder::VanillaFirst
                    },
                })
            }
        })
        .collect()
}

fn flip_everything(outcomes: &[PairwiseOutcome]) -> Vec<PairwiseOutcome> {
    outcomes
        .iter()
        .map(|o| match o {
            PairwiseOutcome::Malformed => PairwiseOutcome::Malformed,
            PairwiseOutcome::Verdict(v) => {
                let flip = |c: Choice| match c {
                    Choice::A => Choice::B,
                    Choice::B => Choice::A,
                };
                PairwiseOutcome::Verdict(PairwiseVerdict {
                    trait_adherence: flip(v.trait_adherence),
                    role_consistency: flip(v.role_consistency),
                    response_appropriateness: flip(v.response_appropriateness),
                    insightfulness: flip(v.insightfulness),
                    overall: flip(v.overall),
                    reasoning: v.reasoning.clone(),
                    presentation_order: match v.presentation_order {
                        PresentationOrder::SteeredFirst => PresentationOrder::VanillaFirst,
                        PresentationOrder::VanillaFirst => PresentationOrder::SteeredFirst,
                    },
                })
            }
        })
        .collect()
}

#[test]
fn acceptance_06_pairwise_aggregation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let outcomes = random_outcomes(&mut rng);
        let table = aggregate_win_rates(&outcomes);
        for criterion in Criterion::ALL {
            // Brute-force recount.
            let mut wins = 0usize;
            let mut losses = 0usize;
            let mut malformed = 0usize;
            for outcome in &outcomes {
                match outcome {
                    PairwiseOutcome::Malformed => malformed += 1,
                    PairwiseOutcome::Verdict(v) => {
                        let steered = matches!(
                            (v.choice(criterion), v.presentation_order),
                            (Choice::A, PresentationOrder::SteeredFirst)
                                | (Choice::B, PresentationOrder::VanillaFirst)
                        );
                        if steered {
                            wins += 1;
                        } else {
                            losses += 1;
                        }
                    }
                }
            }
            let metric = table.get(criterion);
            assert_eq!(metric.wins, wins, "case {case}");
            assert_eq!(metric.losses, losses);
            assert_eq!(metric.malformed, malformed);
            assert_eq!(metric.comparisons, outcomes.len());
            assert_eq!(
                metric.wins + metric.losses + metric.malformed,
                metric.comparisons,
                "conservation"
            );
            let expected_rate = if wins + losses == 0 {
                None
            } else {
                Some(wins as f64 / (wins + losses) as f64)
            };
            assert_eq!(metric.rate, expected_rate, "malformed excluded exactly");
        }
        // A global presentation flip changes nothing after de-biasing.
        assert_eq!(
            aggregate_win_rates(&outcomes),
            aggregate_win_rates(&flip_everything(&outcomes)),
            "case {case}: position-flip invariance"
        );
    }
    pass(6, "1000 aggregation sets match the brute-force counter");
}

// ---------------------------------------------------------------------------
// 7. Composition bookkeeping identity
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_composition_bookkeeping() {
    // Reference fixture: baseline 2.8, component observations 3.5 and 10.5,
    // deltas +0.7 and +7.7, expected combined 11.2.
    let expected = bfi::expected_from_components(2.8, 3.5, 10.5);
    let by_hand = 2.8 + (3.5 - 2.8) + (10.5 - 2.8);
    assert_eq!(expected, by_hand, "bit-identical to the hand computation");
    assert!((expected - 11.2).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let baseline = rng.gen_range(0.0..100.0);
        let a_only = rng.gen_range(0.0..100.0);
        let b_only = rng.gen_range(0.0..100.0);
        let got = bfi::expected_from_components(baseline, a_only, b_only);
        let hand = baseline + (a_only - baseline) + (b_only - baseline);
        assert_eq!(got, hand, "case {case}: exact superposition arithmetic");
    }

    // Degenerate: zero deltas collapse to the baseline.
    assert_eq!(bfi::expected_from_components(42.0, 42.0, 42.0), 42.0);
    pass(7, "expected-secondary bookkeeping exact on reference and random fixtures");
}

// ---------------------------------------------------------------------------
// 8. Ordinary least squares conformance
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_ols_conformance() {
    // Perfect-line fixture: slope 1, intercept 2, r^2 exactly 1.
    let fit = bfi::fit_linear(&[(-1.0, 1.0), (0.0, 2.0), (1.0, 3.0), (2.0, 4.0)]).unwrap();
    assert_eq!(fit.slope, 1.0);
    assert_eq!(fit.intercept, 2.0);
    assert_eq!(fit.r_squared, 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let n = rng.gen_range(3..30);
        let points: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                (
                    i as f64 * 0.5 + rng.gen_range(-0.2..0.2),
                    rng.gen_range(-10.0..10.0),
                )
            })
            .collect();
        let fit = bfi::fit_linear(&points).unwrap();

        // Closed-form normal equations.
        let nf = n as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
        let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
        let intercept = (sy - slope * sx) / nf;
        let r_num = nf * sxy - sx * sy;
        let r_den = ((nf * sxx - sx * sx) * (nf * syy - sy * sy)).sqrt();
        let r = if r_den == 0.0 { 0.0 } else { r_num / r_den };

        assert!((fit.slope - slope).abs() < 1e-9, "case {case} slope");
        assert!((fit.intercept - intercept).abs() < 1e-9, "case {case} intercept");
        assert!((fit.r_squared - r * r).abs() < 1e-9, "case {case} r^2");
        assert!((fit.r_squared - fit.pearson_r * fit.pearson_r).abs() < 1e-9);
    }
    pass(8, "OLS matches closed form on 100 random point sets");
}

// ---------------------------------------------------------------------------
// 9. Vector-store round trip and corruption detection
// ---------------------------------------------------------------------------

fn random_library(rng: &mut ChaCha8Rng) -> VectorLibrary {
    let dim = rng.gen_range(1..24);
    let mut lib = VectorLibrary::new(format!("model-{}", rng.gen::<u32>()), rng.gen_range(0..30));
    let layer = lib.layer;
    let model_id = lib.model_id.clone();
    for pole in TraitPole::ALL {
        let vector: Vec<f32> = (0..dim)
            .map(|_| {
                // Exercise the full value space, including subnormals and
                // infinities; bit-exactness must hold regardless.
                match rng.gen_range(0..10) {
                    0 => 0.0,
                    1 => -0.0,
                    2 => f32::MIN_POSITIVE / 2.0,
                    3 => f32::INFINITY,
                    4 => f32::NEG_INFINITY,
                    _ => rng.gen_range(-1e6f32..1e6),
                }
            })
            .collect();
        lib.insert(PersonaVector {
            pole,
            layer,
            vector,
            model_id: model_id.clone(),
            normalization: Normalization::Raw,
            created_from: ExtractionMeta::default(),
        })
        .unwrap();
    }
    lib
}

#[test]
fn acceptance_09_vector_store_round_trip_and_corruption() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..100 {
        let dir = tempfile::tempdir().unwrap();
        let lib = random_library(&mut rng);
        store::save_library(&lib, dir.path()).unwrap();
        let loaded = store::load_library(dir.path()).unwrap();
        for pole in TraitPole::ALL {
            let a = &lib.get(pole).unwrap().vector;
            let b = &loaded.get(pole).unwrap().vector;
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits(), "case {case}: bit-exact round trip");
            }
        }
    }

    // Corruption: flipping any single bit of any byte of a vector file must
    // be detected at load.
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let lib = random_library(&mut rng);
    store::save_library(&lib, dir.path()).unwrap();
    let target = dir.path().join("nervous.pvec");
    let clean = std::fs::read(&target).unwrap();
    for position in 0..clean.len() {
        let mut corrupted = clean.clone();
        corrupted[position] ^= 0x40;
        std::fs::write(&target, &corrupted).unwrap();
        assert!(
            store::load_library(dir.path()).is_err(),
            "byte {position} corruption went undetected"
        );
    }
    std::fs::write(&target, &clean).unwrap();
    assert!(store::load_library(dir.path()).is_ok(), "restored file loads");
    pass(9, "100 bit-exact round trips; every single-byte corruption detected");
}

// ---------------------------------------------------------------------------
// 10. Benchmark pipeline round trip, fully scripted
// ---------------------------------------------------------------------------

fn scripted_generator() -> JudgeClient {
    let persona = |name: &str, role: &str| {
        serde_json::json!({
            "name": name,
            "role": role,
            "background": format!("{name} keeps a busy schedule"),
            "system_prompt": format!("You are {name}, a {role}."),
            "behavioral_tendencies": ["stays on task", "vents under pressure", "keeps humor dry"],
        })
    };
    let scenario = |n: usize, emotion: &str| {
        serde_json::json!({
            "turn_number": n,
            "model_input": format!("Situation {n}: a customer needs an answer. Respond in character."),
            "context": format!("background for situation {n}"),
            "expected_emotion": emotion,
            "scenario_description": format!("situation {n}"),
        })
    };
    let transport = ScriptedTransport::new(move |req: &TransportRequest| {
        let p = &req.user;
        if p.starts_with("Generate 2 diverse Core Personas") {
            Ok(serde_json::json!({"personas": [persona("Ana", "Nurse"), persona("Ben", "Baker")]})
                .to_string())
        } else if p.starts_with("Create a Dialogue Arc") {
            let name = if p.contains("Ana") { "Ana" } else { "Ben" };
            Ok(serde_json::json!({
                "persona_name": name,
                "arc_description": "a long shift with a bright ending",
                "total_turns": 3,
                "emotional_progression": ["stressed", "frustrated", "relieved"],
            })
            .to_string())
        } else if p.starts_with("Create 3 Scenario Snippets") {
            Ok(serde_json::json!({"scenarios": [
                scenario(1, "stressed"),
                scenario(2, "frustrated"),
                scenario(3, "relieved"),
            ]})
            .to_string())
        } else if p.starts_with("Analyze this dialogue turn") {
            Ok(serde_json::json!({"expected_response_style": "brisk but warm"}).to_string())
        } else {
            Err(persona::judge::TransportError::fatal(format!(
                "unexpected generator prompt: {}",
                &p[..p.len().min(60)]
            )))
        }
    });
    JudgeClient::new(
        JudgeConfig {
            backoff_base_ms: 0,
            backoff_cap_ms: 0,
            ..JudgeConfig::default()
        },
        Box::new(transport),
    )
    .unwrap()
}

fn scripted_pairwise_judge() -> JudgeClient {
    JudgeClient::new(
        JudgeConfig {
            backoff_base_ms: 0,
            backoff_cap_ms: 0,
            ..JudgeConfig::default()
        },
        Box::new(ScriptedTransport::constant(
            r#"{"trait_adherence":"A","role_consistency":"B","response_appropriateness":"A",
               "insightfulness":"A","overall":"A","reasoning":"A reads more in character"}"#,
        )),
    )
    .unwrap()
}

#[test]
fn acceptance_10_benchmark_pipeline_round_trip() {
    // Stage 1-5 with a scripted generator: 2 personas x 3 turns.
    let generator = scripted_generator();
    let gen_config = BenchGenConfig::default();
    let personas = bench::gen_personas(&generator, 2, &[], &gen_config).unwrap();
    let sessions: Vec<SessionRecord> = personas
        .iter()
        .map(|p| bench::gen_session(&generator, p, 3, &gen_config).unwrap())
        .collect();
    for session in &sessions {
        session.validate().expect("schema-valid session");
        assert_eq!(session.turns.len(), 3);
    }

    // Round trip through the on-disk layout.
    let dir = tempfile::tempdir().unwrap();
    bench::save_sessions(&sessions, "scripted", 42, dir.path()).unwrap();
    let (index, loaded) = bench::load_sessions(dir.path()).unwrap();
    assert_eq!(index.sessions, 2);
    assert_eq!(index.turns_per_session, 3);
    assert_eq!(loaded, sessions);

    // Run steered vs vanilla with a scripted predictor and judge.
    let mut gateway = ToyCausalLm::new(ToyConfig {
        hidden_dim: 16,
        num_layers: 3,
        ..ToyConfig::default()
    });
    let library = deterministic_library("toy-causal-d16-l3-v256-s0", 1, 16);
    let judge = scripted_pairwise_judge();
    let script = |_: &str| {
        "Extraversion: 1.0\nAgreeableness: 0\nConscientiousness: 0\nNeuroticism: 0\nOpenness: 0"
            .to_string()
    };
    let report = bench::run_benchmark(
        &mut gateway,
        &PredictorSource::Scripted(&script),
        &library,
        &flow::FlowConfig::default(),
        &loaded,
        &judge,
    )
    .unwrap();

    assert_eq!(report.outcomes.len(), 6, "2 personas x 3 turns");
    assert_eq!(report.timing.responses, 6);

    // Conservation and agreement with the aggregation oracle.
    for criterion in Criterion::ALL {
        let m = report.rates.get(criterion);
        assert_eq!(m.wins + m.losses + m.malformed, m.comparisons);
        assert_eq!(m.comparisons, 6);
    }
    assert_eq!(aggregate_win_rates(&report.outcomes), report.rates);
    let mut overall_wins = 0usize;
    for outcome in &report.outcomes {
        if let PairwiseOutcome::Verdict(v) = outcome {
            if v.winner(Criterion::Overall) == Side::Steered {
                overall_wins += 1;
            }
        }
    }
    assert_eq!(report.rates.get(Criterion::Overall).wins, overall_wins);
    pass(10, "scripted bench gen + run round trip with conserved counts");
}

// ---------------------------------------------------------------------------
// 11. Live trend check (optional; network + credentials gated)
// ---------------------------------------------------------------------------

/// Full live protocol: extract a ten-pole library from the configured local
/// model with a live generator/judge, sweep one trait across
/// alpha in {-1, 0, 1, 2}, and probe the cosine structure.
///
/// Requires `PERSONA_JUDGE_API_KEY` and `PERSONA_JUDGE_BASE_URL`; run with
/// `cargo test --test acceptance -- --ignored acceptance_11`.
#[cfg(feature = "http")]
#[test]
#[ignore = "requires live judge credentials (PERSONA_JUDGE_API_KEY / PERSONA_JUDGE_BASE_URL)"]
fn acceptance_11_live_model_trend() {
    let judge = JudgeClient::from_env(JudgeConfig::default(), false)
        .expect("live credentials are required for this gated check");
    let mut gateway = ToyCausalLm::new(ToyConfig::default());
    let extraction_config = extraction::ExtractionConfig {
        validation_questions: Some(5),
        ..extraction::ExtractionConfig::default()
    };

    let mut library = VectorLibrary::new(gateway.describe().unwrap().model_id, 2);
    let mut sweep_result = None;
    for pole in TraitPole::ALL {
        let artifacts = extraction::generate_trait_artifacts(
            &judge,
            pole,
            pole.description(),
            &extraction_config,
        )
        .unwrap();
        let batch = extraction::collect_contrastive_activations(
            &mut gateway,
            &artifacts,
            &[2],
            &extraction_config,
        )
        .unwrap();
        let vector =
            extraction::compute_persona_vector(&batch, 2, extraction_config.mean_mode).unwrap();
        library.insert(vector.clone()).unwrap();
        if pole == TraitPole::Inventive {
            let sweep = extraction::sweep_coefficients(
                &mut gateway,
                &judge,
                &vector,
                &artifacts,
                &[-1.0, 0.0, 1.0, 2.0],
                &extraction_config,
            )
            .unwrap();
            sweep_result = Some(sweep);
        }
    }

    // Trend: mean trait expression non-decreasing in alpha, allowing one
    // violating consecutive pair.
    let sweep = sweep_result.unwrap();
    let means: Vec<f64> = sweep
        .points
        .iter()
        .map(|p| p.mean_score.expect("defined mean"))
        .collect();
    let violations = means.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(
        violations <= 1,
        "trait expression should trend upward with alpha: {means:?}"
    );

    // Cosine structure: symmetric, unit diagonal, opposing poles negative.
    let matrix = extraction::cosine_matrix(&library).unwrap();
    for i in 0..10 {
        assert!((matrix.values[i][i] - 1.0).abs() < 1e-6);
        for j in 0..10 {
            assert!((matrix.values[i][j] - matrix.values[j][i]).abs() < 1e-6);
        }
    }
    for dim in Dimension::ALL {
        let hi = dim.pole(Polarity::High);
        let lo = dim.pole(Polarity::Low);
        let sim = matrix.get(hi, lo).unwrap();
        assert!(sim < 0.0, "{dim:?} opposing poles should anti-align, got {sim}");
    }
    pass(11, "live sweep trend and cosine structure");
}

// ---------------------------------------------------------------------------
// Shared sanity: the scripted pieces above stay within their budgets.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_budgets_are_respected() {
    let started = std::time::Instant::now();
    let mut model = ToyCausalLm::new(ToyConfig::default());
    let request = GenerationRequest {
        system_prompt: None,
        messages: vec![ChatMessage::user("quick budget probe")],
        sampling: SamplingParams {
            max_new_tokens: 16,
            ..SamplingParams::default()
        },
        seed: 0,
    };
    let _ = model.generate(&request).unwrap();
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 30,
        "a single toy generation should be near-instant, took {elapsed:?}"
    );

    let _ = BTreeMap::from([(0usize, 0usize)]);
}
