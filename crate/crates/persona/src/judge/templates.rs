// SPDX-License-Identifier: MIT OR Apache-2.0

//! Prompt templates for the judge rubrics.

/// Fields describing the persona side of a pairwise comparison.
#[derive(Debug, Clone)]
pub struct PairwiseTask {
    pub persona_name: String,
    pub persona_role: String,
    pub expected_emotion: String,
    pub expected_response_style: String,
    pub context: String,
}

pub(crate) fn trait_score_prompt(rubric: &str, question: &str, answer: &str) -> String {
    format!(
        "{rubric}\n\nQuestion: \"{question}\"\n\nResponse: \"{answer}\"\n"
    )
}

pub(crate) fn likert_prompt(
    trait_name: &str,
    dimension: &str,
    direction: &str,
    question: &str,
    answer: &str,
) -> String {
    format!(
        r#"You are evaluating a response to assess personality traits.

Original scenario/question: "{question}"

Response to evaluate: "{answer}"

You need to evaluate how much the response demonstrates the trait: "{trait_name}" (which represents {direction} {dimension}).

Rate the response on a scale of 1-5 based on how much this trait is evident:

1 = Very low level of this trait (strongly does not demonstrate this characteristic)
2 = Low level of this trait (mostly does not demonstrate this characteristic)
3 = Moderate/neutral level (mixed or unclear evidence)
4 = High level of this trait (mostly demonstrates this characteristic)
5 = Very high level of this trait (strongly demonstrates this characteristic)

Consider the person's approach, reasoning, values, priorities, and behavioral tendencies expressed in the response. Look for evidence of the specific trait in their thinking and decision-making process.

Only respond with a single number from 1-5."#
    )
}

/// Render the pairwise ranking prompt.
///
/// `label_a`/`label_b` are " (Steered)" / " (Non-steered)" when the fixed
/// presentation order is configured, and empty when the order is randomized
/// (labels would leak which response is steered).
pub(crate) fn pairwise_prompt(
    task: &PairwiseTask,
    response_a: &str,
    response_b: &str,
    label_a: &str,
    label_b: &str,
) -> String {
    format!(
        r#"You are evaluating two different responses from the same AI model to determine which better embodies a specific persona in a dialogue scenario.

Persona Information:
- Name: {name}
- Role: {role}
- Expected Emotion: {emotion}
- Expected Response Style: {style}

Context:
{context}

Response A{label_a}:
{response_a}

Response B{label_b}:
{response_b}

Evaluation Criteria: Decide which response is superior for each dimension. Choose either Response A or Response B.

1. Trait Adherence: Which response better matches the expected personality traits and emotional state?
   - Consider how well each response reflects the persona's characteristics
   - Evaluate alignment with the expected emotion
2. Role Consistency: Which response better maintains the character's role and identity?
   - Consider consistency with the persona's background and position
   - Evaluate how well the role is embodied
3. Response Appropriateness: Which response better matches the expected response style and context?
   - Consider adherence to the specified communication style
   - Evaluate appropriateness of tone, approach, and context
4. Insightfulness: Which response demonstrates more depth, thoughtfulness, and analytical reasoning?
   - Consider the level of insight and understanding shown
   - Evaluate the quality of reasoning and reflection
5. Overall Quality: Considering all factors, which response is better overall?
   - Make a holistic judgment considering all criteria
   - Determine which response would be more effective in this dialog context

Response Format: Return a JSON object using "A" for Response A and "B" for Response B.

{{
  "trait_adherence": "A" or "B",
  "role_consistency": "A" or "B",
  "response_appropriateness": "A" or "B",
  "insightfulness": "A" or "B",
  "overall": "A" or "B",
  "reasoning": "Detailed explanation comparing both responses, citing specific aspects for each criterion."
}}"#,
        name = task.persona_name,
        role = task.persona_role,
        emotion = task.expected_emotion,
        style = task.expected_response_style,
        context = task.context,
    )
}
