// SPDX-License-Identifier: MIT OR Apache-2.0

//! Five-stage benchmark generation against a generator LLM.
//!
//! Every stage validates the generator's JSON against the schema and the
//! stage's rules (role exclusion, negative-emotion coverage, progression
//! alignment), re-asking on violations up to a retry budget.

use serde::Deserialize;

use crate::bench::{DialogueArc, Persona, ScenarioTurn, SessionRecord};
use crate::error::{Error, Result};
use crate::judge::{first_json_object, JudgeClient};

/// Settings for benchmark generation.
#[derive(Debug, Clone)]
pub struct BenchGenConfig {
    /// Re-asks per stage on malformed or rule-violating output.
    pub retries: usize,
    /// Negative-valence labels satisfying the arc rule.
    pub negative_lexicon: Vec<String>,
}

impl Default for BenchGenConfig {
    fn default() -> Self {
        BenchGenConfig {
            retries: 2,
            negative_lexicon: super::DEFAULT_NEGATIVE_LEXICON
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

fn ask_with_retries<T>(
    generator: &JudgeClient,
    prompt: &str,
    retries: usize,
    mut parse: impl FnMut(&str) -> Result<T>,
) -> Result<T> {
    let mut last_reason = String::new();
    for attempt in 0..=retries {
        let raw = if attempt == 0 {
            generator.complete("", prompt)?
        } else {
            generator.complete_uncached("", prompt)?
        };
        match parse(&raw) {
            Ok(value) => return Ok(value),
            Err(e) => last_reason = e.to_string(),
        }
    }
    Err(Error::MalformedAfterRetries {
        attempts: retries + 1,
        reason: last_reason,
    })
}

fn json_payload<'de, T: Deserialize<'de>>(raw: &str, owned: &'de mut String) -> Result<T> {
    *owned = first_json_object(raw)
        .ok_or_else(|| Error::Serde("no JSON object in generator output".into()))?;
    serde_json::from_str(owned).map_err(|e| Error::Serde(e.to_string()))
}

// ---------------------------------------------------------------------------
// Stage 1: personas
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct PersonaPayload {
    personas: Vec<Persona>,
}

fn persona_prompt(n: usize, existing_roles: &[String]) -> String {
    format!(
        r#"Generate {n} diverse Core Personas for multi-turn dialogue evaluation.

Each persona should be a realistic professional or social role that would encounter various emotional situations, including negative emotions like frustration, disappointment, or complaints.

IMPORTANT: Avoid generating personas with the following roles that already exist:
{existing}

For each persona, provide:
1. Name (realistic name)
2. Role (job title or social position) - MUST be different from existing roles
3. Background (brief context about their situation)
4. System Prompt (clear instructions for the AI model on how to roleplay this persona)
5. Behavioral Tendencies (3-4 key behavioral patterns)

Examples of good personas:
- Overworked Software Developer dealing with bugs and deadlines
- Customer Service Representative handling difficult customers
- College Student managing academic and social pressures
- Working Parent balancing career and family responsibilities
- Small Business Owner facing financial challenges
- Healthcare Worker dealing with long shifts

Return as JSON object with a "personas" array:
{{
  "personas": [
    {{
      "name": "Alex Rivera",
      "role": "Overworked Software Developer",
      "background": "Mid-level developer at a startup, constantly dealing with tight deadlines and changing requirements",
      "system_prompt": "You are Alex Rivera, a software developer who is passionate about coding but often frustrated with unrealistic deadlines...",
      "behavioral_tendencies": [
        "Becomes frustrated with poor planning",
        "Vents to friends about work stress",
        "Tries to maintain work quality despite pressure",
        "Uses technical jargon and sarcastic humor"
      ]
    }}
  ]
}}"#,
        existing = if existing_roles.is_empty() {
            "(none)".to_string()
        } else {
            existing_roles.join(", ")
        },
    )
}

/// Generate `n` personas with roles disjoint from `existing_roles` and from
/// each other.
pub fn gen_personas(
    generator: &JudgeClient,
    n: usize,
    existing_roles: &[String],
    config: &BenchGenConfig,
) -> Result<Vec<Persona>> {
    if n == 0 {
        return Err(Error::Precondition("n must be >= 1".into()));
    }
    let prompt = persona_prompt(n, existing_roles);
    ask_with_retries(generator, &prompt, config.retries, |raw| {
        let mut owned = String::new();
        let payload: PersonaPayload = json_payload(raw, &mut owned)?;
        if payload.personas.len() != n {
            return Err(Error::InvariantViolation(format!(
                "asked for {n} personas, got {}",
                payload.personas.len()
            )));
        }
        let mut seen: Vec<String> = existing_roles.iter().map(|r| r.to_lowercase()).collect();
        for persona in &payload.personas {
            persona.validate()?;
            let role = persona.role.to_lowercase();
            if seen.contains(&role) {
                return Err(Error::InvariantViolation(format!(
                    "role `{}` duplicates an existing role",
                    persona.role
                )));
            }
            seen.push(role);
        }
        Ok(payload.personas)
    })
}

// ---------------------------------------------------------------------------
// Stage 2: dialogue arcs
// ---------------------------------------------------------------------------

fn arc_prompt(persona: &Persona, num_turns: usize) -> String {
    format!(
        r#"Create a Dialogue Arc for the following persona that will span {num_turns} conversation turns.

Persona Details:
- Name: {name}
- Role: {role}
- Background: {background}
- Behavioral Tendencies: {tendencies}

Design a realistic narrative/emotional journey where this persona encounters {num_turns} different scenarios.

IMPORTANT: At least one turn should involve negative emotions where the persona complains, vents, or expresses frustration (e.g., complaining to a friend about work, expressing disappointment, showing irritation).

The arc should:
1. Have a coherent storyline (e.g., a challenging work day, personal struggles, relationship issues)
2. Include emotional progression across turns including both positive and negative emotions
3. Show realistic emotional variation while staying in character
4. Include at least one scenario with negative emotions like complaining, frustration, or disappointment

Return JSON with this structure:
{{
  "persona_name": "{name}",
  "arc_description": "Brief description of the overall narrative",
  "total_turns": {num_turns},
  "emotional_progression": [
    "stressed",
    "frustrated",
    "complaining",
    "relieved",
    "optimistic"
  ]
}}"#,
        name = persona.name,
        role = persona.role,
        background = persona.background,
        tendencies = persona.behavioral_tendencies.join(", "),
    )
}

/// Generate one arc for a persona; the progression must cover `num_turns`
/// and contain at least one negative-valence label.
pub fn gen_arc(
    generator: &JudgeClient,
    persona: &Persona,
    num_turns: usize,
    config: &BenchGenConfig,
) -> Result<DialogueArc> {
    if num_turns < 2 {
        return Err(Error::Precondition("num_turns must be >= 2".into()));
    }
    let prompt = arc_prompt(persona, num_turns);
    ask_with_retries(generator, &prompt, config.retries, |raw| {
        let mut owned = String::new();
        let arc: DialogueArc = json_payload(raw, &mut owned)?;
        if arc.total_turns != num_turns {
            return Err(Error::InvariantViolation(format!(
                "asked for {num_turns} turns, arc declares {}",
                arc.total_turns
            )));
        }
        arc.validate(&config.negative_lexicon)?;
        Ok(arc)
    })
}

// ---------------------------------------------------------------------------
// Stage 3: scenario snippets
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct ScenarioPayload {
    scenarios: Vec<ScenarioTurn>,
}

fn scenario_prompt(persona: &Persona, arc: &DialogueArc) -> String {
    format!(
        r#"Create {turns} Scenario Snippets for the following Dialogue Arc, formatted for LLM evaluation.

Persona: {name} - {role}
Arc Description: {arc}
Emotional Progression: {progression}

Requirements for each scenario:
1. Be formatted as a scenario description that prompts the model to respond in character
2. Follow the emotional progression naturally
3. Create situations that naturally elicit the target emotion
4. Form a coherent narrative sequence
5. At least one scenario should prompt negative emotions like complaining or venting
6. Do not emphasize the character in 'model_input' as it is given to the model as system prompt

IMPORTANT: Format each scenario as a prompt that describes the situation to the model and asks it to respond in character.

Return as JSON object with a "scenarios" array:
{{
  "scenarios": [
    {{
      "turn_number": 1,
      "model_input": "Scenario description that prompts the model to respond in character",
      "context": "Background context for this specific situation",
      "expected_emotion": "The emotion the persona should exhibit",
      "scenario_description": "Brief description of the situation for evaluation purposes"
    }}
  ]
}}"#,
        turns = arc.total_turns,
        name = persona.name,
        role = persona.role,
        arc = arc.arc_description,
        progression = arc.emotional_progression.join(", "),
    )
}

/// Generate the arc's scenarios, turn-numbered and emotion-aligned with the
/// progression; `expected_response_style` stays empty until stage 4.
pub fn gen_scenarios(
    generator: &JudgeClient,
    persona: &Persona,
    arc: &DialogueArc,
    config: &BenchGenConfig,
) -> Result<Vec<ScenarioTurn>> {
    arc.validate(&config.negative_lexicon)?;
    let prompt = scenario_prompt(persona, arc);
    ask_with_retries(generator, &prompt, config.retries, |raw| {
        let mut owned = String::new();
        let payload: ScenarioPayload = json_payload(raw, &mut owned)?;
        if payload.scenarios.len() != arc.total_turns {
            return Err(Error::InvariantViolation(format!(
                "arc has {} turns, generator returned {} scenarios",
                arc.total_turns,
                payload.scenarios.len()
            )));
        }
        for (i, scenario) in payload.scenarios.iter().enumerate() {
            if scenario.turn_number != i + 1 {
                return Err(Error::InvariantViolation(format!(
                    "scenario {} carries turn_number {}",
                    i + 1,
                    scenario.turn_number
                )));
            }
            scenario.validate(false)?;
            let expected = &arc.emotional_progression[i];
            if !scenario
                .expected_emotion
                .trim()
                .eq_ignore_ascii_case(expected.trim())
            {
                return Err(Error::InvariantViolation(format!(
                    "turn {} emotion `{}` does not match the arc's `{}`",
                    scenario.turn_number, scenario.expected_emotion, expected
                )));
            }
        }
        Ok(payload.scenarios)
    })
}

// ---------------------------------------------------------------------------
// Stage 4: expected response styles
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct StylePayload {
    expected_response_style: String,
}

fn style_prompt(persona: &Persona, turn: &ScenarioTurn) -> String {
    format!(
        r#"Analyze this dialogue turn for evaluation.

Persona: {name} - {role}
System Prompt: {system_prompt}
Model Input: {model_input}
Context: {context}
Expected Emotion: {emotion}

Provide:
1. Expected Response Style: How should the persona respond to this user input while maintaining character consistency?

Return as a JSON object:
{{
  "expected_response_style": "Detailed description of how the persona should respond, including tone, content, and emotional expression"
}}"#,
        name = persona.name,
        role = persona.role,
        system_prompt = persona.system_prompt,
        model_input = turn.model_input,
        context = turn.context,
        emotion = turn.expected_emotion,
    )
}

/// Generate the expected response style for one turn.
pub fn gen_expected_style(
    generator: &JudgeClient,
    persona: &Persona,
    turn: &ScenarioTurn,
    config: &BenchGenConfig,
) -> Result<String> {
    turn.validate(false)?;
    let prompt = style_prompt(persona, turn);
    ask_with_retries(generator, &prompt, config.retries, |raw| {
        let mut owned = String::new();
        let payload: StylePayload = json_payload(raw, &mut owned)?;
        if payload.expected_response_style.trim().is_empty() {
            return Err(Error::InvariantViolation("empty response style".into()));
        }
        Ok(payload.expected_response_style)
    })
}

// ---------------------------------------------------------------------------
// Stage 5: assembly
// ---------------------------------------------------------------------------

/// Run stages 2-5 for one persona: arc, scenarios, styles, assembled session.
pub fn gen_session(
    generator: &JudgeClient,
    persona: &Persona,
    num_turns: usize,
    config: &BenchGenConfig,
) -> Result<SessionRecord> {
    persona.validate()?;
    let arc = gen_arc(generator, persona, num_turns, config)?;
    let mut turns = gen_scenarios(generator, persona, &arc, config)?;
    for turn in &mut turns {
        turn.expected_response_style = gen_expected_style(generator, persona, turn, config)?;
    }
    let session = SessionRecord {
        persona: persona.clone(),
        arc,
        turns,
        extra: Default::default(),
    };
    session.validate()?;
    Ok(session)
}
