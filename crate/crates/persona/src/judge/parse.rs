// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic parsing of judge replies.
//!
//! Parsing is total: every reply maps to exactly one of {valid verdict,
//! refusal, malformed}; nothing is silently dropped. The client layer handles
//! re-asks.

use serde::Deserialize;

/// Outcome of the 0-100 trait rubric before the re-ask policy is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraitParse {
    Score(u8),
    Refusal,
    Malformed,
}

/// Parse a trait-rubric reply: the REFUSAL token, or one integer in 0..=100.
///
/// The first signed integer in the text decides; an out-of-range value (e.g.
/// `105` or `-5`) is malformed rather than truncated.
pub fn parse_trait_score(text: &str) -> TraitParse {
    if text
        .split(|c: char| !c.is_ascii_alphabetic())
        .any(|word| word.eq_ignore_ascii_case("refusal"))
    {
        return TraitParse::Refusal;
    }
    match first_integer(text) {
        Some(v) if (0..=100).contains(&v) => TraitParse::Score(v as u8),
        _ => TraitParse::Malformed,
    }
}

/// Parse a 1-5 Likert reply: the first integer that falls in range.
pub fn parse_likert(text: &str) -> Option<u8> {
    integers(text)
        .into_iter()
        .find(|v| (1..=5).contains(v))
        .map(|v| v as u8)
}

fn integers(text: &str) -> Vec<i64> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let negative = bytes[i] == b'-'
            && i + 1 < bytes.len()
            && bytes[i + 1].is_ascii_digit()
            // A digit right before the minus means this is an infix dash.
            && (i == 0 || !bytes[i - 1].is_ascii_digit());
        let start = if negative { i + 1 } else { i };
        if bytes[start].is_ascii_digit() {
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            // Skip decimals like "4.5": an integer followed by '.' + digit.
            let is_decimal_head = end < bytes.len().saturating_sub(1)
                && bytes[end] == b'.'
                && bytes[end + 1].is_ascii_digit();
            if !is_decimal_head {
                if let Ok(v) = text[start..end].parse::<i64>() {
                    out.push(if negative { -v } else { v });
                }
            }
            i = end;
            // Jump past a decimal tail so its fraction digits are not re-read.
            if is_decimal_head {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
        } else {
            i += 1;
        }
    }
    out
}

fn first_integer(text: &str) -> Option<i64> {
    integers(text).into_iter().next()
}

#[derive(Debug, Deserialize)]
pub struct PairwiseChoices {
    pub trait_adherence: String,
    pub role_consistency: String,
    pub response_appropriateness: String,
    pub insightfulness: String,
    pub overall: String,
    #[serde(default)]
    pub reasoning: String,
}

/// Extract and decode the first balanced JSON object in the reply.
///
/// Judges often wrap the requested JSON in prose or a code fence; scanning
/// for a balanced object tolerates both.
pub fn parse_pairwise_choices(text: &str) -> Option<PairwiseChoices> {
    let json = first_json_object(text)?;
    let choices: PairwiseChoices = serde_json::from_str(&json).ok()?;
    for v in [
        &choices.trait_adherence,
        &choices.role_consistency,
        &choices.response_appropriateness,
        &choices.insightfulness,
        &choices.overall,
    ] {
        let norm = v.trim().to_ascii_uppercase();
        if norm != "A" && norm != "B" {
            return None;
        }
    }
    Some(choices)
}

/// First balanced `{...}` block in `text`, if any.
pub(crate) fn first_json_object(text: &str) -> Option<String> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(text[start..=start + i].to_string());
                }
            }
            _ => {}
        }
    }
    None
}
