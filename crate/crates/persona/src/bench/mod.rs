// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multi-turn persona benchmark: generation, execution, aggregation.
//!
//! Benchmark construction is a five-stage pipeline: personas, one dialogue
//! arc per persona, per-turn scenarios aligned with the arc's emotional
//! progression, expected response styles, then assembly into session
//! records. Running the benchmark produces, per turn, a vanilla response
//! (persona system prompt, no steering) and a predict-then-steer response
//! with the same seed, judged pairwise on five criteria; win rates aggregate
//! with malformed verdicts excluded. A semantic-similarity leakage check
//! guards against overlap between extraction prompts and benchmark scenarios.

mod generate;
mod leakage;

pub use generate::{
    gen_arc, gen_expected_style, gen_personas, gen_scenarios, gen_session, BenchGenConfig,
};
pub use leakage::{leakage_check, HashEmbedder, LeakageReport, TextEmbedder};

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, FlowTurnResult, PredictorSource};
use crate::gateway::{ChatMessage, GenerationRequest, ModelGateway, Role};
use crate::judge::{Criterion, JudgeClient, PairwiseTask, PairwiseVerdict, Side};
use crate::seeds::derive_seed;
use crate::store::VectorLibrary;

/// Labels that satisfy the at-least-one-negative-emotion rule, matched as
/// case-insensitive substrings of a progression entry.
pub const DEFAULT_NEGATIVE_LEXICON: &[&str] = &[
    "frustrated",
    "complaining",
    "stressed",
    "overwhelmed",
    "disappointed",
    "angry",
    "venting",
    "irritated",
    "anxious",
    "upset",
    "annoyed",
    "sad",
    "worried",
    "discouraged",
    "exhausted",
    "resentful",
];

pub(crate) fn is_negative_label(label: &str, lexicon: &[String]) -> bool {
    let lower = label.to_ascii_lowercase();
    lexicon.iter().any(|w| lower.contains(&w.to_ascii_lowercase()))
}

/// A core persona: stable behavioral constraints for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub role: String,
    pub background: String,
    pub system_prompt: String,
    pub behavioral_tendencies: Vec<String>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Persona {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("name", &self.name),
            ("role", &self.role),
            ("background", &self.background),
            ("system_prompt", &self.system_prompt),
        ] {
            if value.trim().is_empty() {
                return Err(Error::InvariantViolation(format!("persona {field} is empty")));
            }
        }
        let n = self.behavioral_tendencies.len();
        if !(3..=4).contains(&n) {
            return Err(Error::InvariantViolation(format!(
                "persona `{}` needs 3-4 behavioral tendencies, found {n}",
                self.name
            )));
        }
        Ok(())
    }
}

/// A narrative trajectory: per-turn emotion labels for one persona.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueArc {
    pub persona_name: String,
    pub arc_description: String,
    pub total_turns: usize,
    pub emotional_progression: Vec<String>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl DialogueArc {
    pub fn validate(&self, negative_lexicon: &[String]) -> Result<()> {
        if self.emotional_progression.len() != self.total_turns {
            return Err(Error::InvariantViolation(format!(
                "progression length {} does not match total_turns {}",
                self.emotional_progression.len(),
                self.total_turns
            )));
        }
        if !self
            .emotional_progression
            .iter()
            .any(|label| is_negative_label(label, negative_lexicon))
        {
            return Err(Error::InvariantViolation(
                "arc has no negative-valence turn".into(),
            ));
        }
        Ok(())
    }
}

/// One benchmark turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTurn {
    /// 1-based and contiguous within a session.
    pub turn_number: usize,
    pub model_input: String,
    pub context: String,
    pub expected_emotion: String,
    pub scenario_description: String,
    /// Filled by stage 4; empty in stage-3 output.
    #[serde(default)]
    pub expected_response_style: String,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl ScenarioTurn {
    pub fn validate(&self, require_style: bool) -> Result<()> {
        if self.turn_number == 0 {
            return Err(Error::InvariantViolation("turn_number must be 1-based".into()));
        }
        let mut fields = vec![
            ("model_input", &self.model_input),
            ("context", &self.context),
            ("expected_emotion", &self.expected_emotion),
            ("scenario_description", &self.scenario_description),
        ];
        if require_style {
            fields.push(("expected_response_style", &self.expected_response_style));
        }
        for (name, value) in fields {
            if value.trim().is_empty() {
                return Err(Error::InvariantViolation(format!(
                    "turn {}: {name} is empty",
                    self.turn_number
                )));
            }
        }
        Ok(())
    }
}

/// A persona, its arc, and the assembled turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub persona: Persona,
    pub arc: DialogueArc,
    pub turns: Vec<ScenarioTurn>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl SessionRecord {
    pub fn validate(&self) -> Result<()> {
        self.persona.validate()?;
        let lexicon: Vec<String> = DEFAULT_NEGATIVE_LEXICON.iter().map(|s| s.to_string()).collect();
        self.arc.validate(&lexicon)?;
        if self.turns.len() != self.arc.total_turns {
            return Err(Error::InvariantViolation(format!(
                "{} turns assembled for an arc of {}",
                self.turns.len(),
                self.arc.total_turns
            )));
        }
        for (i, turn) in self.turns.iter().enumerate() {
            if turn.turn_number != i + 1 {
                return Err(Error::InvariantViolation(format!(
                    "turns must be contiguous from 1; slot {} holds turn {}",
                    i + 1,
                    turn.turn_number
                )));
            }
            turn.validate(true)?;
        }
        Ok(())
    }
}

/// Outcome of one pairwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PairwiseOutcome {
    Verdict(PairwiseVerdict),
    /// The judge never produced a parseable verdict for this pair.
    Malformed,
}

/// Win/loss/malformed counts and the resulting rate for one criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRate {
    pub wins: usize,
    pub losses: usize,
    pub malformed: usize,
    pub comparisons: usize,
    /// `wins / (comparisons - malformed)`; absent when nothing was judged.
    pub rate: Option<f64>,
}

/// Win rates for the five criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateTable {
    pub metrics: BTreeMap<String, MetricRate>,
}

impl WinRateTable {
    pub fn get(&self, criterion: Criterion) -> &MetricRate {
        &self.metrics[criterion.short_name()]
    }
}

/// Count steered wins per criterion; malformed comparisons are excluded from
/// the denominator, and counts are conserved
/// (`wins + losses + malformed == comparisons`).
pub fn aggregate_win_rates(outcomes: &[PairwiseOutcome]) -> WinRateTable {
    let mut metrics = BTreeMap::new();
    for criterion in Criterion::ALL {
        let mut wins = 0usize;
        let mut losses = 0usize;
        let mut malformed = 0usize;
        for outcome in outcomes {
            match outcome {
                PairwiseOutcome::Verdict(v) => match v.winner(criterion) {
                    Side::Steered => wins += 1,
                    Side::Vanilla => losses += 1,
                },
                PairwiseOutcome::Malformed => malformed += 1,
            }
        }
        let judged = wins + losses;
        let rate = if judged == 0 {
            None
        } else {
            Some(wins as f64 / judged as f64)
        };
        metrics.insert(
            criterion.short_name().to_string(),
            MetricRate {
                wins,
                losses,
                malformed,
                comparisons: outcomes.len(),
                rate,
            },
        );
    }
    WinRateTable { metrics }
}

/// Per-session overall tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionBreakdown {
    pub persona_name: String,
    pub persona_role: String,
    pub overall_steered_wins: usize,
    pub comparisons: usize,
    pub malformed: usize,
}

/// Wall-clock accounting for the two pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub responses: usize,
    pub steered_total_s: f64,
    pub vanilla_total_s: f64,
    pub steered_per_response_s: f64,
    pub vanilla_per_response_s: f64,
}

/// Full benchmark outcome. Raw per-comparison outcomes are kept so rates can
/// be recounted from the report alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rates: WinRateTable,
    pub per_session: Vec<SessionBreakdown>,
    pub malformed: usize,
    pub timing: TimingSummary,
    pub outcomes: Vec<PairwiseOutcome>,
}

/// Run the steered-vs-vanilla protocol over validated sessions.
///
/// Vanilla responses use the same persona system prompt and per-turn seeds
/// as the steered runs, so steering is the only difference within a turn.
pub fn run_benchmark<G: ModelGateway>(
    gateway: &mut G,
    predictor: &PredictorSource<'_>,
    library: &VectorLibrary,
    flow_config: &FlowConfig,
    sessions: &[SessionRecord],
    judge: &JudgeClient,
) -> Result<BenchmarkReport> {
    if sessions.is_empty() {
        return Err(Error::Precondition("no sessions to run".into()));
    }
    for session in sessions {
        session.validate()?;
    }

    let mut outcomes: Vec<PairwiseOutcome> = Vec::new();
    let mut per_session = Vec::with_capacity(sessions.len());
    let mut steered_total_s = 0.0f64;
    let mut vanilla_total_s = 0.0f64;
    let mut responses = 0usize;

    for session in sessions {
        let steered_started = Instant::now();
        let steered: Vec<FlowTurnResult> =
            flow::run_session(gateway, predictor, library, flow_config, session)?;
        steered_total_s += steered_started.elapsed().as_secs_f64();

        let vanilla_started = Instant::now();
        let vanilla = vanilla_session(gateway, flow_config, session)?;
        vanilla_total_s += vanilla_started.elapsed().as_secs_f64();

        let mut session_wins = 0usize;
        let mut session_malformed = 0usize;
        for (turn, (steered_turn, vanilla_text)) in
            session.turns.iter().zip(steered.iter().zip(vanilla.iter()))
        {
            responses += 1;
            let task = PairwiseTask {
                persona_name: session.persona.name.clone(),
                persona_role: session.persona.role.clone(),
                expected_emotion: turn.expected_emotion.clone(),
                expected_response_style: turn.expected_response_style.clone(),
                context: format!("{}\nCurrent input: {}", turn.context, turn.model_input),
            };
            let order_seed = derive_seed(
                flow_config.base_seed,
                &format!("rank/{}/{}", session.persona.name, turn.turn_number),
            );
            match judge.rank_pairwise(&task, &steered_turn.response_text, vanilla_text, order_seed)
            {
                Ok(verdict) => {
                    if verdict.winner(Criterion::Overall) == Side::Steered {
                        session_wins += 1;
                    }
                    outcomes.push(PairwiseOutcome::Verdict(verdict));
                }
                Err(Error::MalformedVerdict(_)) => {
                    session_malformed += 1;
                    outcomes.push(PairwiseOutcome::Malformed);
                }
                Err(e) => return Err(e),
            }
        }
        per_session.push(SessionBreakdown {
            persona_name: session.persona.name.clone(),
            persona_role: session.persona.role.clone(),
            overall_steered_wins: session_wins,
            comparisons: session.turns.len(),
            malformed: session_malformed,
        });
    }

    let rates = aggregate_win_rates(&outcomes);
    let malformed = outcomes
        .iter()
        .filter(|o| matches!(o, PairwiseOutcome::Malformed))
        .count();
    let timing = TimingSummary {
        responses,
        steered_total_s,
        vanilla_total_s,
        steered_per_response_s: steered_total_s / responses as f64,
        vanilla_per_response_s: vanilla_total_s / responses as f64,
    };
    Ok(BenchmarkReport {
        rates,
        per_session,
        malformed,
        timing,
        outcomes,
    })
}

/// Vanilla side of the comparison: persona system prompt, accumulated
/// history, per-turn seeds shared with the steered run, no steering.
fn vanilla_session<G: ModelGateway>(
    gateway: &mut G,
    flow_config: &FlowConfig,
    session: &SessionRecord,
) -> Result<Vec<String>> {
    let mut history: Vec<(String, String)> = Vec::new();
    let mut responses = Vec::with_capacity(session.turns.len());
    for turn in &session.turns {
        let mut messages = Vec::new();
        for (user, assistant) in &history {
            messages.push(ChatMessage {
                role: Role::User,
                text: user.clone(),
            });
            messages.push(ChatMessage {
                role: Role::Assistant,
                text: assistant.clone(),
            });
        }
        messages.push(ChatMessage::user(&turn.model_input));
        let seed = derive_seed(
            flow::session_turn_seed(
                flow_config.base_seed,
                &session.persona.name,
                turn.turn_number,
            ),
            "generate",
        );
        let request = GenerationRequest {
            system_prompt: Some(session.persona.system_prompt.clone()),
            messages,
            sampling: flow_config.sampling,
            seed,
        };
        let generation = gateway.generate(&request)?;
        history.push((turn.model_input.clone(), generation.text.clone()));
        responses.push(generation.text);
    }
    Ok(responses)
}

/// Top-level index written next to session files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkIndex {
    pub personas: usize,
    pub sessions: usize,
    pub turns_per_session: usize,
    pub generator_model: String,
    pub seed: u64,
    pub created_at: String,
    pub session_files: Vec<String>,
}

pub const INDEX_FILE: &str = "index.json";

fn slugify(text: &str) -> String {
    text.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect::<String>()
        .split('-')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("-")
}

/// Write one JSON document per session plus the index; returns the index path.
pub fn save_sessions(
    sessions: &[SessionRecord],
    generator_model: &str,
    seed: u64,
    directory: &Path,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(directory)
        .map_err(|e| Error::io(directory.display().to_string(), e))?;
    let mut session_files = Vec::with_capacity(sessions.len());
    for (i, session) in sessions.iter().enumerate() {
        let file = format!("session_{:03}_{}.json", i + 1, slugify(&session.persona.role));
        let path = directory.join(&file);
        let json = serde_json::to_string_pretty(session)?;
        std::fs::write(&path, json).map_err(|e| Error::io(path.display().to_string(), e))?;
        session_files.push(file);
    }
    let turns = sessions.first().map(|s| s.turns.len()).unwrap_or(0);
    let index = BenchmarkIndex {
        personas: sessions.len(),
        sessions: sessions.len(),
        turns_per_session: turns,
        generator_model: generator_model.to_string(),
        seed,
        created_at: chrono::Utc::now().to_rfc3339(),
        session_files,
    };
    let index_path = directory.join(INDEX_FILE);
    std::fs::write(&index_path, serde_json::to_string_pretty(&index)?)
        .map_err(|e| Error::io(index_path.display().to_string(), e))?;
    Ok(index_path)
}

/// Load sessions listed by a directory's index, validating each record.
pub fn load_sessions(directory: &Path) -> Result<(BenchmarkIndex, Vec<SessionRecord>)> {
    let index_path = directory.join(INDEX_FILE);
    if !index_path.exists() {
        return Err(Error::MissingFile(index_path.display().to_string()));
    }
    let index: BenchmarkIndex = serde_json::from_slice(
        &std::fs::read(&index_path).map_err(|e| Error::io(index_path.display().to_string(), e))?,
    )?;
    let mut sessions = Vec::with_capacity(index.session_files.len());
    for file in &index.session_files {
        let path = directory.join(file);
        if !path.exists() {
            return Err(Error::MissingFile(path.display().to_string()));
        }
        let session: SessionRecord = serde_json::from_slice(
            &std::fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?,
        )?;
        session.validate()?;
        sessions.push(session);
    }
    Ok((index, sessions))
}
