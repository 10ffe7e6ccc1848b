// SPDX-License-Identifier: MIT OR Apache-2.0

//! Behavioral questionnaire evaluation.
//!
//! Questionnaire items become open-ended scenarios (self-report items are
//! unusable on an LLM), the model answers them under steering, a judge rates
//! each answer on a 1-5 Likert scale, low-pole items are reverse-keyed, and
//! per-dimension means summarize the result. On top of that sit the linear
//! coefficient-response fit, recipe-driven vector-arithmetic validation, the
//! fixed-vs-swept causal-independence grid, and the cross-dimensional
//! composition probes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{add, scale, CompositeVector};
use crate::error::{Error, Result};
use crate::extraction::TraitArtifacts;
use crate::gateway::{ChatMessage, GenerationRequest, ModelGateway, SamplingParams, SteeringSpec};
use crate::judge::{JudgeClient, LikertVerdict, TraitVerdictKind};
use crate::ocean::{Dimension, Polarity, TraitPole};
use crate::seeds::derive_seed;
use crate::store::VectorLibrary;

/// One source questionnaire item: the pole it assesses plus its statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BfiItem {
    pub id: String,
    pub pole: TraitPole,
    pub text: String,
}

/// A questionnaire item transformed into an open-ended scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioItem {
    pub source_item_id: String,
    pub trait_id: TraitPole,
    pub scenario_text: String,
}

/// One judged administration of a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertRecord {
    pub item: ScenarioItem,
    pub response_text: String,
    /// 1-5.
    pub score: u8,
    pub judge_model: String,
}

/// Per-dimension mean scores; dimensions with no items are absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DimensionScores {
    scores: BTreeMap<Dimension, f64>,
    n_items: BTreeMap<Dimension, usize>,
}

impl DimensionScores {
    pub fn get(&self, dimension: Dimension) -> Option<f64> {
        self.scores.get(&dimension).copied()
    }

    pub fn n_items(&self, dimension: Dimension) -> usize {
        self.n_items.get(&dimension).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Dimension, f64)> + '_ {
        self.scores.iter().map(|(&d, &s)| (d, s))
    }
}

/// Settings for administration and the probe harnesses.
#[derive(Debug, Clone)]
pub struct BfiConfig {
    pub sampling: SamplingParams,
    pub base_seed: u64,
    /// Extra generator attempts per item during scenario transformation.
    pub transform_retries: usize,
    /// |delta| at or under this counts as "flat" in recipe checks.
    pub flat_tolerance: f64,
    /// Independent runs per grid condition (confidence intervals).
    pub repeats: usize,
    /// Absolute tolerance for the composition superposition check.
    pub composition_tolerance: f64,
    /// Cap on questions per trait-expression scoring pass.
    pub max_questions: Option<usize>,
}

impl Default for BfiConfig {
    fn default() -> Self {
        BfiConfig {
            sampling: SamplingParams {
                temperature: 1.0,
                top_p: 1.0,
                max_new_tokens: 48,
            },
            base_seed: 42,
            transform_retries: 2,
            flat_tolerance: 0.25,
            repeats: 3,
            composition_tolerance: 1.0,
            max_questions: None,
        }
    }
}

fn scenario_prompt(item: &BfiItem) -> String {
    let dimension = item.pole.dimension().name();
    let (category, represents) = match item.pole.polarity() {
        Polarity::High => ("positive", "represents high"),
        Polarity::Low => ("negative", "represents low"),
    };
    format!(
        r#"You are a psychology expert creating scenario-based questions to assess personality traits.

I need you to generate ONE open-ended scenario question that can effectively assess the degree of this trait: "{trait}"

Trait details:
- Dimension: {dimension}
- Category: {category} (this trait {represents} {dimension})

Requirements for the scenario question:
1. Create a realistic, everyday situation where someone's response would reveal their level of this trait
2. The question should be open-ended, allowing for detailed responses
3. The scenario should be specific enough to elicit trait-relevant behavior
4. Avoid directly asking about the trait - instead create a situation where the trait naturally emerges
5. The question should be suitable for an AI model to respond to

Example format: "You're [situation description]. How would you handle this situation?"

For reference, here's an example for assessing carelessness:

"You have an important job interview scheduled for tomorrow morning. How would you prepare for it tonight and tomorrow morning?"

Generate only the scenario question, nothing else."#,
        trait = item.text,
    )
}

/// Transform questionnaire items into scenarios, one per item. Empty
/// generator output is retried, then flagged as a failure naming the item.
pub fn transform_items(
    generator: &JudgeClient,
    items: &[BfiItem],
    config: &BfiConfig,
) -> Result<Vec<ScenarioItem>> {
    let mut scenarios = Vec::with_capacity(items.len());
    for item in items {
        let prompt = scenario_prompt(item);
        let mut scenario = None;
        for attempt in 0..=config.transform_retries {
            let raw = if attempt == 0 {
                generator.complete("", &prompt)?
            } else {
                generator.complete_uncached("", &prompt)?
            };
            let trimmed = raw.trim();
            if !trimmed.is_empty() {
                scenario = Some(trimmed.to_string());
                break;
            }
        }
        let scenario_text = scenario.ok_or_else(|| {
            Error::GeneratorFailure(format!(
                "empty scenario for item `{}` after {} attempts",
                item.id,
                config.transform_retries + 1
            ))
        })?;
        scenarios.push(ScenarioItem {
            source_item_id: item.id.clone(),
            trait_id: item.pole,
            scenario_text,
        });
    }
    Ok(scenarios)
}

/// Records plus the count of judgments excluded as unparsable.
#[derive(Debug, Clone, PartialEq)]
pub struct AdministerOutcome {
    pub records: Vec<LikertRecord>,
    pub excluded: usize,
}

/// Administer scenarios under optional steering and judge each response.
pub fn administer<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    scenarios: &[ScenarioItem],
    steering: Option<&CompositeVector>,
    config: &BfiConfig,
) -> Result<AdministerOutcome> {
    if scenarios.is_empty() {
        return Err(Error::Precondition("no scenarios to administer".into()));
    }
    let mut records = Vec::new();
    let mut excluded = 0usize;
    for (index, scenario) in scenarios.iter().enumerate() {
        let seed = derive_seed(
            config.base_seed,
            &format!("bfi/{}/{index}", scenario.source_item_id),
        );
        let request = GenerationRequest {
            system_prompt: None,
            messages: vec![ChatMessage::user(&scenario.scenario_text)],
            sampling: config.sampling,
            seed,
        };
        let generation = match steering {
            Some(composite) if !composite.is_zero() => {
                gateway.generate_with_steering(&request, &composite.steering_spec())?
            }
            _ => gateway.generate(&request)?,
        };
        let verdict = judge.score_likert(
            scenario.trait_id.name(),
            scenario.trait_id.dimension().name(),
            scenario.trait_id.polarity().as_str(),
            &scenario.scenario_text,
            &generation.text,
        )?;
        match verdict {
            LikertVerdict::Score(score) => records.push(LikertRecord {
                item: scenario.clone(),
                response_text: generation.text,
                score,
                judge_model: judge.config().model.clone(),
            }),
            LikertVerdict::Malformed { .. } => excluded += 1,
        }
    }
    Ok(AdministerOutcome { records, excluded })
}

/// Reduce records to per-dimension scores: low-pole items are reverse-keyed
/// as `6 - s`, then all of a dimension's items are averaged together.
pub fn dimension_scores(records: &[LikertRecord]) -> Result<DimensionScores> {
    if records.is_empty() {
        return Err(Error::Precondition("no records to score".into()));
    }
    let mut sums: BTreeMap<Dimension, f64> = BTreeMap::new();
    let mut counts: BTreeMap<Dimension, usize> = BTreeMap::new();
    for record in records {
        let keyed = match record.item.trait_id.polarity() {
            Polarity::High => f64::from(record.score),
            Polarity::Low => 6.0 - f64::from(record.score),
        };
        let dimension = record.item.trait_id.dimension();
        *sums.entry(dimension).or_default() += keyed;
        *counts.entry(dimension).or_default() += 1;
    }
    let scores = sums
        .into_iter()
        .map(|(d, sum)| (d, sum / counts[&d] as f64))
        .collect();
    Ok(DimensionScores {
        scores,
        n_items: counts,
    })
}

/// Ordinary least squares over `(alpha, score)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fit a line to at least three points spanning at least two distinct alphas.
/// Constant scores define `r = 0` by convention.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 points, found {}",
            points.len()
        )));
    }
    let distinct = points
        .iter()
        .map(|(x, _)| x.to_bits())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if distinct < 2 {
        return Err(Error::Precondition("need at least 2 distinct alphas".into()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    let slope = cov / var_x;
    let intercept = mean_y - slope * mean_x;
    // Single square root of the product keeps r exactly 1 on perfect lines.
    let pearson_r = if var_y == 0.0 {
        0.0
    } else {
        cov / (var_x * var_y).sqrt()
    };
    Ok(LinearFit {
        slope,
        intercept,
        pearson_r,
        r_squared: pearson_r * pearson_r,
        points: points.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Recipes: named vector expressions with expected score directions
// ---------------------------------------------------------------------------

/// Expected movement of one dimension's score under a recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedDirection {
    Up,
    Down,
    Flat,
}

/// A named vector expression plus the directions it should move dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub name: String,
    pub expression: String,
    pub expected: BTreeMap<Dimension, ExpectedDirection>,
}

#[derive(Deserialize)]
struct RecipeFile {
    #[serde(rename = "recipe")]
    recipes: Vec<RecipeEntry>,
}

#[derive(Deserialize)]
struct RecipeEntry {
    name: String,
    expr: String,
    #[serde(default)]
    expect: BTreeMap<String, String>,
}

/// Load recipes from TOML:
///
/// ```toml
/// [[recipe]]
/// name = "outgoing_plus_compassionate"
/// expr = "outgoing + compassionate"
/// expect = { E = "up", A = "up" }
/// ```
pub fn load_recipes(path: &Path) -> Result<Vec<Recipe>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_recipes(&text)
}

pub fn parse_recipes(text: &str) -> Result<Vec<Recipe>> {
    let file: RecipeFile =
        toml::from_str(text).map_err(|e| Error::Serde(format!("recipe file: {e}")))?;
    file.recipes
        .into_iter()
        .map(|entry| {
            let mut expected = BTreeMap::new();
            for (dim, dir) in entry.expect {
                let dimension: Dimension = dim.parse()?;
                let direction = match dir.to_ascii_lowercase().as_str() {
                    "up" => ExpectedDirection::Up,
                    "down" => ExpectedDirection::Down,
                    "flat" => ExpectedDirection::Flat,
                    other => {
                        return Err(Error::Config(format!("unknown direction `{other}`")))
                    }
                };
                expected.insert(dimension, direction);
            }
            Ok(Recipe {
                name: entry.name,
                expression: entry.expr,
                expected,
            })
        })
        .collect()
}

/// Evaluate a vector expression like `outgoing + compassionate` or
/// `outgoing - 0.5*solitary` against a library's raw vectors.
pub fn evaluate_expression(expression: &str, library: &VectorLibrary) -> Result<Vec<f32>> {
    let trimmed = expression.trim();
    if trimmed.is_empty() {
        return Err(Error::Precondition("empty vector expression".into()));
    }
    let dim = library
        .hidden_dim()
        .ok_or_else(|| Error::Precondition("library is empty".into()))?;
    let mut acc = vec![0.0f32; dim];
    // Normalize so every term carries an explicit leading sign.
    let signed = if trimmed.starts_with('+') || trimmed.starts_with('-') {
        trimmed.to_string()
    } else {
        format!("+{trimmed}")
    };
    let mut term = String::new();
    let mut terms: Vec<String> = Vec::new();
    for c in signed.chars() {
        if (c == '+' || c == '-') && !term.trim().is_empty() {
            terms.push(term.clone());
            term.clear();
        }
        term.push(c);
    }
    if !term.trim().is_empty() {
        terms.push(term);
    }
    for raw_term in terms {
        let raw_term = raw_term.trim();
        let (sign, body) = match raw_term.split_at(1) {
            ("+", rest) => (1.0f64, rest.trim()),
            ("-", rest) => (-1.0f64, rest.trim()),
            _ => (1.0f64, raw_term),
        };
        let (coefficient, pole_text) = match body.split_once('*') {
            Some((c, p)) => {
                let c: f64 = c.trim().parse().map_err(|_| {
                    Error::ParseFailure(format!("bad scalar `{}` in expression", c.trim()))
                })?;
                (c, p.trim())
            }
            None => (1.0, body),
        };
        let pole: TraitPole = pole_text.parse()?;
        let vector = &library.require(pole)?.vector;
        acc = add(&acc, &scale(vector, sign * coefficient))?;
    }
    Ok(acc)
}

/// One expectation's outcome inside a recipe run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    pub dimension: Dimension,
    pub expected: ExpectedDirection,
    pub baseline: f64,
    pub steered: f64,
    pub delta: f64,
    pub met: bool,
}

/// Outcome of one recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeOutcome {
    pub name: String,
    pub expression: String,
    pub steered: DimensionScores,
    pub checks: Vec<ExpectationCheck>,
    pub excluded: usize,
}

/// Full arithmetic-validation report: baseline scores plus per-recipe
/// steered scores and expectation checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticReport {
    pub baseline: DimensionScores,
    pub baseline_excluded: usize,
    pub recipes: Vec<RecipeOutcome>,
}

/// Administer the scenario set at baseline and under each recipe's vector,
/// marking every expected direction met or unmet.
pub fn arithmetic_validation<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    library: &VectorLibrary,
    recipes: &[Recipe],
    scenarios: &[ScenarioItem],
    config: &BfiConfig,
) -> Result<ArithmeticReport> {
    if recipes.is_empty() {
        return Err(Error::Precondition("no recipes to validate".into()));
    }
    let baseline_run = administer(gateway, judge, scenarios, None, config)?;
    let baseline = dimension_scores(&baseline_run.records)?;
    let mut outcomes = Vec::with_capacity(recipes.len());
    for recipe in recipes {
        let vector = evaluate_expression(&recipe.expression, library)?;
        let composite = CompositeVector {
            vector,
            contributions: Vec::new(),
            layer: library.layer,
        };
        let steered_run = administer(gateway, judge, scenarios, Some(&composite), config)?;
        let steered = dimension_scores(&steered_run.records)?;
        let mut checks = Vec::new();
        for (&dimension, &expected) in &recipe.expected {
            let base = baseline.get(dimension).ok_or_else(|| {
                Error::Precondition(format!("baseline has no {dimension} items"))
            })?;
            let after = steered.get(dimension).ok_or_else(|| {
                Error::Precondition(format!("steered run has no {dimension} items"))
            })?;
            let delta = after - base;
            let met = match expected {
                ExpectedDirection::Up => delta > 0.0,
                ExpectedDirection::Down => delta < 0.0,
                ExpectedDirection::Flat => delta.abs() <= config.flat_tolerance,
            };
            checks.push(ExpectationCheck {
                dimension,
                expected,
                baseline: base,
                steered: after,
                delta,
                met,
            });
        }
        outcomes.push(RecipeOutcome {
            name: recipe.name.clone(),
            expression: recipe.expression.clone(),
            steered,
            checks,
            excluded: steered_run.excluded,
        });
    }
    Ok(ArithmeticReport {
        baseline,
        baseline_excluded: baseline_run.excluded,
        recipes: outcomes,
    })
}

// ---------------------------------------------------------------------------
// Trait-expression scoring shared by the grid and the probes
// ---------------------------------------------------------------------------

/// Questions plus the 0-100 rubric used to score one pole's expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalAssets {
    pub questions: Vec<String>,
    pub rubric: String,
}

impl EvalAssets {
    /// Validation-half questions and the rubric from generated artifacts.
    pub fn from_artifacts(artifacts: &TraitArtifacts) -> Self {
        EvalAssets {
            questions: artifacts.validation_half().to_vec(),
            rubric: artifacts.eval_rubric.clone(),
        }
    }
}

/// Mean trait-expression score under a fixed steering spec; refusals and
/// malformed verdicts are excluded from the mean.
fn expression_score<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    assets: &EvalAssets,
    spec: &SteeringSpec,
    seed_label: &str,
    config: &BfiConfig,
) -> Result<f64> {
    let limit = config
        .max_questions
        .unwrap_or(usize::MAX)
        .min(assets.questions.len());
    if limit == 0 {
        return Err(Error::Precondition("no questions to score".into()));
    }
    let mut scores = Vec::new();
    for (qi, question) in assets.questions[..limit].iter().enumerate() {
        let seed = derive_seed(config.base_seed, &format!("{seed_label}/{qi}"));
        let request = GenerationRequest {
            system_prompt: None,
            messages: vec![ChatMessage::user(question)],
            sampling: config.sampling,
            seed,
        };
        let generation = gateway.generate_with_steering(&request, spec)?;
        let verdict = judge.score_trait(&assets.rubric, question, &generation.text)?;
        if let TraitVerdictKind::Score(s) = verdict.kind {
            scores.push(f64::from(s));
        }
    }
    if scores.is_empty() {
        return Err(Error::Precondition(format!(
            "no scored verdicts for `{seed_label}`"
        )));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Mean and a 95% normal-approximation half-width over repeat runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatStat {
    pub mean: f64,
    pub ci_half_width: f64,
    pub runs: Vec<f64>,
}

impl RepeatStat {
    fn from_runs(runs: Vec<f64>) -> Self {
        let n = runs.len() as f64;
        let mean = runs.iter().sum::<f64>() / n;
        let half = if runs.len() < 2 {
            0.0
        } else {
            let var = runs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
            1.96 * (var / n).sqrt()
        };
        RepeatStat {
            mean,
            ci_half_width: half,
            runs,
        }
    }
}

/// One grid cell: a layer and a swept coefficient, with both poles' scores
/// and their deltas against the swept-zero row of the same layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub layer: usize,
    pub swept_alpha: f64,
    pub fixed_score: RepeatStat,
    pub swept_score: RepeatStat,
    pub delta_fixed: f64,
    pub delta_swept: f64,
}

/// Causal-independence grid report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub fixed_pole: TraitPole,
    pub fixed_alpha: f64,
    pub swept_pole: TraitPole,
    pub rows: Vec<GridRow>,
}

/// Hold one pole's coefficient fixed while sweeping another dimension's
/// pole, scoring both traits per (layer, alpha) with repeat runs.
///
/// Each library steers at its own layer; the swept alpha list must contain
/// `0.0`, the per-layer baseline row the deltas are computed against.
#[allow(clippy::too_many_arguments)]
pub fn causal_independence_grid<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    libraries: &[VectorLibrary],
    fixed: (TraitPole, f64),
    swept: (TraitPole, &[f64]),
    fixed_assets: &EvalAssets,
    swept_assets: &EvalAssets,
    config: &BfiConfig,
) -> Result<GridReport> {
    let (fixed_pole, fixed_alpha) = fixed;
    let (swept_pole, swept_alphas) = swept;
    if fixed_pole.dimension() == swept_pole.dimension() {
        return Err(Error::Precondition(
            "fixed and swept poles must come from different dimensions".into(),
        ));
    }
    if libraries.is_empty() || swept_alphas.is_empty() {
        return Err(Error::Precondition("empty grid".into()));
    }
    if !swept_alphas.contains(&0.0) {
        return Err(Error::Precondition(
            "swept alpha list must include the 0.0 baseline".into(),
        ));
    }
    if config.repeats == 0 {
        return Err(Error::Precondition("repeats must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for library in libraries {
        let layer = library.layer;
        let fixed_vector = &library.require(fixed_pole)?.vector;
        let swept_vector = &library.require(swept_pole)?.vector;
        let mut layer_rows = Vec::new();
        for &alpha in swept_alphas {
            let mut fixed_runs = Vec::with_capacity(config.repeats);
            let mut swept_runs = Vec::with_capacity(config.repeats);
            for repeat in 0..config.repeats {
                let mut spec = SteeringSpec::new();
                spec.add(layer, scale(fixed_vector, fixed_alpha));
                spec.add(layer, scale(swept_vector, alpha));
                let label = format!(
                    "grid/{}/{}/{layer}/{alpha}/{repeat}",
                    fixed_pole.slug(),
                    swept_pole.slug()
                );
                fixed_runs.push(expression_score(
                    gateway,
                    judge,
                    fixed_assets,
                    &spec,
                    &format!("{label}/fixed"),
                    config,
                )?);
                swept_runs.push(expression_score(
                    gateway,
                    judge,
                    swept_assets,
                    &spec,
                    &format!("{label}/swept"),
                    config,
                )?);
            }
            layer_rows.push(GridRow {
                layer,
                swept_alpha: alpha,
                fixed_score: RepeatStat::from_runs(fixed_runs),
                swept_score: RepeatStat::from_runs(swept_runs),
                delta_fixed: 0.0,
                delta_swept: 0.0,
            });
        }
        let baseline = layer_rows
            .iter()
            .find(|r| r.swept_alpha == 0.0)
            .map(|r| (r.fixed_score.mean, r.swept_score.mean))
            .expect("0.0 verified present above");
        for row in &mut layer_rows {
            row.delta_fixed = row.fixed_score.mean - baseline.0;
            row.delta_swept = row.swept_score.mean - baseline.1;
        }
        rows.extend(layer_rows);
    }
    Ok(GridReport {
        fixed_pole,
        fixed_alpha,
        swept_pole,
        rows,
    })
}

/// One cross-dimensional sweep row: both traits' scores when steering only
/// the primary pole at `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDimRow {
    pub alpha: f64,
    pub primary_score: f64,
    pub secondary_score: f64,
}

/// Superposition check for the composition variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionCheck {
    pub baseline: f64,
    pub a_only: f64,
    pub b_only: f64,
    pub combined_observed: f64,
    pub combined_expected: f64,
    pub met: bool,
}

/// Cross-dimensional probe report: the per-alpha sweep plus the linear
/// composition bookkeeping for the monitored pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDimReport {
    pub primary: TraitPole,
    pub secondary: TraitPole,
    pub rows: Vec<CrossDimRow>,
    pub composition: CompositionCheck,
}

/// Expected score of a monitored trait under combined steering, assuming the
/// two vectors' secondary effects superpose linearly.
pub fn expected_from_components(baseline: f64, a_only: f64, b_only: f64) -> f64 {
    baseline + (a_only - baseline) + (b_only - baseline)
}

/// Steer the primary pole across `alphas` while scoring both the primary and
/// the correlated secondary trait, then run the composition variant:
/// monitored-trait scores under {none, primary, secondary, primary+secondary}
/// at coefficient 1.0, compared against linear superposition.
#[allow(clippy::too_many_arguments)]
pub fn cross_dimension_probe<G: ModelGateway>(
    gateway: &mut G,
    judge: &JudgeClient,
    library: &VectorLibrary,
    primary: TraitPole,
    secondary: TraitPole,
    alphas: &[f64],
    primary_assets: &EvalAssets,
    secondary_assets: &EvalAssets,
    config: &BfiConfig,
) -> Result<CrossDimReport> {
    if primary == secondary {
        return Err(Error::Precondition("probe traits must be distinct".into()));
    }
    if alphas.is_empty() {
        return Err(Error::Precondition("alphas must be non-empty".into()));
    }
    let layer = library.layer;
    let primary_vector = &library.require(primary)?.vector;
    let secondary_vector = &library.require(secondary)?.vector;

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let spec = SteeringSpec::single(layer, scale(primary_vector, alpha));
        let label = format!("probe/{}/{alpha}", primary.slug());
        rows.push(CrossDimRow {
            alpha,
            primary_score: expression_score(
                gateway,
                judge,
                primary_assets,
                &spec,
                &format!("{label}/primary"),
                config,
            )?,
            secondary_score: expression_score(
                gateway,
                judge,
                secondary_assets,
                &spec,
                &format!("{label}/secondary"),
                config,
            )?,
        });
    }

    let monitored = secondary_assets;
    let score_with = |gateway: &mut G, spec: &SteeringSpec, label: &str| {
        expression_score(gateway, judge, monitored, spec, label, config)
    };
    let zero = SteeringSpec::single(layer, vec![0.0; primary_vector.len()]);
    let baseline = score_with(gateway, &zero, "probe/comp/baseline")?;
    let a_spec = SteeringSpec::single(layer, primary_vector.clone());
    let a_only = score_with(gateway, &a_spec, "probe/comp/a")?;
    let b_spec = SteeringSpec::single(layer, secondary_vector.clone());
    let b_only = score_with(gateway, &b_spec, "probe/comp/b")?;
    let combined_spec = SteeringSpec::single(layer, add(primary_vector, secondary_vector)?);
    let combined_observed = score_with(gateway, &combined_spec, "probe/comp/ab")?;
    let combined_expected = expected_from_components(baseline, a_only, b_only);
    let composition = CompositionCheck {
        baseline,
        a_only,
        b_only,
        combined_observed,
        combined_expected,
        met: (combined_observed - combined_expected).abs() <= config.composition_tolerance,
    };

    Ok(CrossDimReport {
        primary,
        secondary,
        rows,
        composition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::{JudgeClient, JudgeConfig, ScriptedTransport};
    use crate::synthetic::{basis_library, EchoVectorGateway, PlantedLikertJudge, PlantedTraitJudge};

    fn fast_config() -> JudgeConfig {
        JudgeConfig {
            backoff_base_ms: 0,
            backoff_cap_ms: 0,
            ..JudgeConfig::default()
        }
    }

    fn scripted_judge(transport: ScriptedTransport) -> JudgeClient {
        JudgeClient::new(fast_config(), Box::new(transport)).unwrap()
    }

    fn planted_likert_judge() -> JudgeClient {
        JudgeClient::new(fast_config(), Box::new(PlantedLikertJudge)).unwrap()
    }

    fn planted_trait_judge() -> JudgeClient {
        JudgeClient::new(fast_config(), Box::new(PlantedTraitJudge)).unwrap()
    }

    fn items_for(poles: &[TraitPole]) -> Vec<BfiItem> {
        poles
            .iter()
            .enumerate()
            .map(|(i, &pole)| BfiItem {
                id: format!("item-{i}"),
                pole,
                text: format!("is someone who leans {}", pole.name()),
            })
            .collect()
    }

    fn scenarios_for(poles: &[TraitPole]) -> Vec<ScenarioItem> {
        poles
            .iter()
            .enumerate()
            .map(|(i, &pole)| ScenarioItem {
                source_item_id: format!("item-{i}"),
                trait_id: pole,
                scenario_text: format!("Scenario {i} probing {}", pole.name()),
            })
            .collect()
    }

    fn full_scenario_set() -> Vec<ScenarioItem> {
        scenarios_for(&TraitPole::ALL)
    }

    #[test]
    fn scenario_prompt_carries_the_reference_exemplar() {
        let prompt = scenario_prompt(&BfiItem {
            id: "x".into(),
            pole: TraitPole::Careless,
            text: "can be somewhat careless".into(),
        });
        assert!(prompt.contains("important job interview scheduled"));
        assert!(prompt.contains("represents low Conscientiousness"));
        let high = scenario_prompt(&BfiItem {
            id: "y".into(),
            pole: TraitPole::Outgoing,
            text: "is talkative".into(),
        });
        assert!(high.contains("represents high Extraversion"));
    }

    #[test]
    fn administer_without_steering_matches_vanilla_generation() {
        use crate::gateway::toy::{ToyCausalLm, ToyConfig};
        let mut gateway = ToyCausalLm::new(ToyConfig::default());
        let judge = scripted_judge(ScriptedTransport::constant("3"));
        let scenarios = scenarios_for(&[TraitPole::Outgoing, TraitPole::Calm]);
        let config = BfiConfig::default();
        let outcome = administer(&mut gateway, &judge, &scenarios, None, &config).unwrap();

        for (index, scenario) in scenarios.iter().enumerate() {
            let seed = derive_seed(
                config.base_seed,
                &format!("bfi/{}/{index}", scenario.source_item_id),
            );
            let vanilla = gateway
                .generate(&GenerationRequest {
                    system_prompt: None,
                    messages: vec![ChatMessage::user(&scenario.scenario_text)],
                    sampling: config.sampling,
                    seed,
                })
                .unwrap();
            assert_eq!(outcome.records[index].response_text, vanilla.text);
        }
    }

    #[test]
    fn transform_preserves_count_and_attaches_nonempty_text() {
        let generator = scripted_judge(ScriptedTransport::constant(
            "You're at a party where you know nobody. How do you spend the evening?",
        ));
        let items = items_for(&TraitPole::ALL);
        let mut all44 = Vec::new();
        for _ in 0..4 {
            all44.extend(items.clone());
        }
        all44.push(items[0].clone());
        all44.push(items[1].clone());
        all44.push(items[2].clone());
        all44.push(items[3].clone());
        assert_eq!(all44.len(), 44);
        let scenarios =
            transform_items(&generator, &all44, &BfiConfig::default()).unwrap();
        assert_eq!(scenarios.len(), 44);
        assert!(scenarios.iter().all(|s| !s.scenario_text.is_empty()));
    }

    #[test]
    fn transform_retries_empty_output_then_flags() {
        let generator = scripted_judge(ScriptedTransport::queue(vec![
            Ok("  ".into()),
            Ok("".into()),
            Ok("A usable scenario?".into()),
        ]));
        let items = items_for(&[TraitPole::Careless]);
        let config = BfiConfig {
            transform_retries: 2,
            ..BfiConfig::default()
        };
        let out = transform_items(&generator, &items, &config).unwrap();
        assert_eq!(out[0].scenario_text, "A usable scenario?");

        let generator = scripted_judge(ScriptedTransport::constant(""));
        let err = transform_items(&generator, &items, &config);
        assert!(matches!(err, Err(Error::GeneratorFailure(_))));
    }

    #[test]
    fn administer_scores_every_scenario() {
        let mut gateway = EchoVectorGateway::new("echo", 2);
        let judge = scripted_judge(ScriptedTransport::constant("4"));
        let out = administer(
            &mut gateway,
            &judge,
            &full_scenario_set(),
            None,
            &BfiConfig::default(),
        )
        .unwrap();
        assert_eq!(out.records.len(), 10);
        assert_eq!(out.excluded, 0);
        assert!(out.records.iter().all(|r| r.score == 4));
    }

    #[test]
    fn administer_excludes_unparsable_judgments_after_reask() {
        let mut gateway = EchoVectorGateway::new("echo", 2);
        let judge = scripted_judge(ScriptedTransport::queue(vec![
            Ok("4".into()),
            Ok("six".into()), // first ask
            Ok("six".into()), // re-ask
            Ok("2".into()),
        ]));
        let out = administer(
            &mut gateway,
            &judge,
            &scenarios_for(&[TraitPole::Outgoing, TraitPole::Calm, TraitPole::Nervous]),
            None,
            &BfiConfig::default(),
        )
        .unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.excluded, 1);
    }

    #[test]
    fn reverse_keying_flips_low_pole_items() {
        let records: Vec<LikertRecord> = scenarios_for(&[
            TraitPole::Outgoing,
            TraitPole::Outgoing,
            TraitPole::Solitary,
            TraitPole::Solitary,
        ])
        .into_iter()
        .enumerate()
        .map(|(i, item)| LikertRecord {
            item,
            response_text: String::new(),
            score: if i < 2 { 5 } else { 1 },
            judge_model: "scripted".into(),
        })
        .collect();
        let scores = dimension_scores(&records).unwrap();
        assert_eq!(scores.get(Dimension::Extraversion), Some(5.0));
        assert_eq!(scores.n_items(Dimension::Extraversion), 4);
        assert_eq!(scores.get(Dimension::Openness), None, "absent, not zero");
    }

    #[test]
    fn all_threes_are_a_neutral_fixed_point() {
        let records: Vec<LikertRecord> = full_scenario_set()
            .into_iter()
            .map(|item| LikertRecord {
                item,
                response_text: String::new(),
                score: 3,
                judge_model: "scripted".into(),
            })
            .collect();
        let scores = dimension_scores(&records).unwrap();
        for dim in Dimension::ALL {
            assert_eq!(scores.get(dim), Some(3.0));
        }
    }

    #[test]
    fn reverse_keying_is_an_involution() {
        for s in 1u8..=5 {
            let keyed = 6.0 - f64::from(s);
            assert_eq!(6.0 - keyed, f64::from(s));
        }
    }

    #[test]
    fn linear_fit_recovers_exact_lines() {
        let fit = fit_linear(&[(-1.0, 1.0), (0.0, 2.0), (1.0, 3.0), (2.0, 4.0)]).unwrap();
        assert_eq!(fit.slope, 1.0);
        assert_eq!(fit.intercept, 2.0);
        assert_eq!(fit.r_squared, 1.0, "perfect line gives r^2 = 1 exactly");
    }

    #[test]
    fn linear_fit_constant_scores_convention() {
        let fit = fit_linear(&[(0.0, 2.0), (1.0, 2.0), (2.0, 2.0)]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.pearson_r, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn linear_fit_matches_closed_form() {
        let points = vec![(0.0, 1.2), (0.5, 2.1), (1.0, 2.8), (1.5, 4.3), (2.0, 4.9)];
        let fit = fit_linear(&points).unwrap();
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = sy / n - slope * sx / n;
        assert!((fit.slope - slope).abs() < 1e-9);
        assert!((fit.intercept - intercept).abs() < 1e-9);
        assert!((fit.r_squared - fit.pearson_r * fit.pearson_r).abs() < 1e-9);
    }

    #[test]
    fn linear_fit_preconditions() {
        assert!(fit_linear(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_linear(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }

    #[test]
    fn recipes_parse_from_toml() {
        let text = r#"
[[recipe]]
name = "outgoing_plus_compassionate"
expr = "outgoing + compassionate"
expect = { E = "up", A = "up" }

[[recipe]]
name = "outgoing_minus_solitary"
expr = "outgoing - solitary"
expect = { E = "up" }
"#;
        let recipes = parse_recipes(text).unwrap();
        assert_eq!(recipes.len(), 2);
        assert_eq!(
            recipes[0].expected[&Dimension::Agreeableness],
            ExpectedDirection::Up
        );
    }

    #[test]
    fn expression_evaluation_handles_scalars_and_signs() {
        let lib = basis_library("echo", 1);
        let v = evaluate_expression("outgoing - 0.5*compassionate + 2*nervous", &lib).unwrap();
        let idx = crate::synthetic::pole_axis;
        assert_eq!(v[idx(TraitPole::Outgoing)], 1.0);
        assert_eq!(v[idx(TraitPole::Compassionate)], -0.5);
        assert_eq!(v[idx(TraitPole::Nervous)], 2.0);
        assert!(matches!(
            evaluate_expression("", &lib),
            Err(Error::Precondition(_))
        ));
        assert!(evaluate_expression("outgoing + warp", &lib).is_err());
    }

    #[test]
    fn arithmetic_validation_matches_the_planted_rule() {
        let mut gateway = EchoVectorGateway::new("echo", 2);
        let judge = planted_likert_judge();
        let lib = basis_library("echo", 1);
        let recipes = parse_recipes(
            r#"
[[recipe]]
name = "add_outgoing_compassionate"
expr = "outgoing + compassionate"
expect = { E = "up", A = "up", N = "flat" }

[[recipe]]
name = "outgoing_minus_compassionate"
expr = "outgoing - compassionate"
expect = { E = "up", A = "down" }
"#,
        )
        .unwrap();
        let report = arithmetic_validation(
            &mut gateway,
            &judge,
            &lib,
            &recipes,
            &full_scenario_set(),
            &BfiConfig::default(),
        )
        .unwrap();
        for dim in Dimension::ALL {
            assert_eq!(report.baseline.get(dim), Some(3.0), "unsteered neutral");
        }
        for outcome in &report.recipes {
            for check in &outcome.checks {
                assert!(
                    check.met,
                    "{}: {:?} expected {:?}, delta {}",
                    outcome.name, check.dimension, check.expected, check.delta
                );
            }
        }
        // The planted rule moves exactly one step per unit coefficient.
        let first = &report.recipes[0];
        let e_check = first
            .checks
            .iter()
            .find(|c| c.dimension == Dimension::Extraversion)
            .unwrap();
        assert_eq!(e_check.delta, 1.0);
    }

    #[test]
    fn empty_recipe_expression_is_a_precondition_error() {
        let mut gateway = EchoVectorGateway::new("echo", 2);
        let judge = planted_likert_judge();
        let lib = basis_library("echo", 1);
        let recipes = vec![Recipe {
            name: "empty".into(),
            expression: "   ".into(),
            expected: BTreeMap::new(),
        }];
        let err = arithmetic_validation(
            &mut gateway,
            &judge,
            &lib,
            &recipes,
            &full_scenario_set(),
            &BfiConfig::default(),
        );
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    fn planted_assets(pole: TraitPole) -> EvalAssets {
        EvalAssets {
            questions: vec![format!("How would you approach {}?", pole.slug())],
            rubric: crate::synthetic::planted_rubric(pole),
        }
    }

    #[test]
    fn grid_deltas_equal_brute_force_recomputation() {
        let mut gateway = EchoVectorGateway::new("echo", 4);
        let judge = planted_trait_judge();
        let libraries = vec![basis_library("echo", 1), basis_library("echo", 2)];
        let config = BfiConfig {
            repeats: 2,
            ..BfiConfig::default()
        };
        let report = causal_independence_grid(
            &mut gateway,
            &judge,
            &libraries,
            (TraitPole::Outgoing, 1.0),
            (TraitPole::Compassionate, &[-1.0, 0.0, 1.0, 2.0]),
            &planted_assets(TraitPole::Outgoing),
            &planted_assets(TraitPole::Compassionate),
            &config,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 8, "2 layers x 4 alphas");

        // Independent recomputation of every delta from the stored means.
        for layer in [1usize, 2] {
            let base = report
                .rows
                .iter()
                .find(|r| r.layer == layer && r.swept_alpha == 0.0)
                .unwrap();
            for row in report.rows.iter().filter(|r| r.layer == layer) {
                assert_eq!(row.delta_fixed, row.fixed_score.mean - base.fixed_score.mean);
                assert_eq!(row.delta_swept, row.swept_score.mean - base.swept_score.mean);
            }
        }

        // Planted rule: swept coefficient moves only the swept trait
        // (20 points per unit), never the fixed trait.
        for row in &report.rows {
            assert_eq!(row.delta_fixed, 0.0);
            assert_eq!(row.delta_swept, 20.0 * row.swept_alpha);
        }
    }

    #[test]
    fn grid_with_only_zero_alpha_has_zero_deltas() {
        let mut gateway = EchoVectorGateway::new("echo", 4);
        let judge = planted_trait_judge();
        let libraries = vec![basis_library("echo", 1)];
        let config = BfiConfig {
            repeats: 1,
            ..BfiConfig::default()
        };
        let report = causal_independence_grid(
            &mut gateway,
            &judge,
            &libraries,
            (TraitPole::Outgoing, 1.0),
            (TraitPole::Compassionate, &[0.0]),
            &planted_assets(TraitPole::Outgoing),
            &planted_assets(TraitPole::Compassionate),
            &config,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].delta_fixed, 0.0);
        assert_eq!(report.rows[0].delta_swept, 0.0);
    }

    #[test]
    fn grid_rejects_same_dimension_poles() {
        let mut gateway = EchoVectorGateway::new("echo", 4);
        let judge = planted_trait_judge();
        let libraries = vec![basis_library("echo", 1)];
        let err = causal_independence_grid(
            &mut gateway,
            &judge,
            &libraries,
            (TraitPole::Outgoing, 1.0),
            (TraitPole::Solitary, &[0.0]),
            &planted_assets(TraitPole::Outgoing),
            &planted_assets(TraitPole::Solitary),
            &BfiConfig::default(),
        );
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn composition_bookkeeping_identity() {
        // Reference fixture: components 2.8 baseline, +0.7 and +7.7 deltas.
        let expected = expected_from_components(2.8, 3.5, 10.5);
        assert!((expected - 11.2).abs() < 1e-12);
        // Hand-computed synthetic superposition.
        assert_eq!(expected_from_components(1.0, 2.0, 4.0), 5.0);
        // Zero deltas collapse to the baseline.
        assert_eq!(expected_from_components(7.0, 7.0, 7.0), 7.0);
    }

    #[test]
    fn cross_dimension_probe_superposes_exactly_under_the_planted_rule() {
        let mut gateway = EchoVectorGateway::new("echo", 4);
        let judge = planted_trait_judge();
        let lib = basis_library("echo", 1);
        let report = cross_dimension_probe(
            &mut gateway,
            &judge,
            &lib,
            TraitPole::Nervous,
            TraitPole::Careless,
            &[-1.0, 0.0, 1.0, 2.0],
            &planted_assets(TraitPole::Nervous),
            &planted_assets(TraitPole::Careless),
            &BfiConfig::default(),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 4);
        for row in &report.rows {
            assert_eq!(row.primary_score, (50.0 + 20.0 * row.alpha).clamp(0.0, 100.0));
            assert_eq!(row.secondary_score, 50.0, "basis vectors are orthogonal");
        }
        let comp = &report.composition;
        assert!(comp.met);
        assert_eq!(
            comp.combined_expected,
            expected_from_components(comp.baseline, comp.a_only, comp.b_only)
        );
        assert_eq!(comp.combined_observed, comp.combined_expected);
    }

    #[test]
    fn probe_rejects_identical_traits() {
        let mut gateway = EchoVectorGateway::new("echo", 4);
        let judge = planted_trait_judge();
        let lib = basis_library("echo", 1);
        let err = cross_dimension_probe(
            &mut gateway,
            &judge,
            &lib,
            TraitPole::Nervous,
            TraitPole::Nervous,
            &[0.0],
            &planted_assets(TraitPole::Nervous),
            &planted_assets(TraitPole::Nervous),
            &BfiConfig::default(),
        );
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}
