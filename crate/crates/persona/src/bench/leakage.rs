// SPDX-License-Identifier: MIT OR Apache-2.0

//! Semantic-similarity leakage check between extraction prompts and
//! benchmark scenarios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pluggable text-embedding client; any calibrated semantic-similarity
/// embedder is acceptable, and its identity is recorded in the report.
pub trait TextEmbedder {
    fn id(&self) -> String;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;
}

/// Deterministic bag-of-words hashing embedder; no network, stable across
/// runs. Coarse, but self-similarity is exact and overlap is monotone.
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: 512 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl TextEmbedder for HashEmbedder {
    fn id(&self) -> String {
        format!("hash-bow-v1/{}", self.dim)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        Ok(texts
            .iter()
            .map(|text| {
                let mut v = vec![0.0f32; self.dim];
                let words: Vec<String> = text
                    .to_lowercase()
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|w| !w.is_empty())
                    .map(str::to_owned)
                    .collect();
                for w in &words {
                    v[(fnv1a(w.as_bytes()) % self.dim as u64) as usize] += 1.0;
                }
                for pair in words.windows(2) {
                    let bigram = format!("{} {}", pair[0], pair[1]);
                    v[(fnv1a(bigram.as_bytes()) % self.dim as u64) as usize] += 1.0;
                }
                let norm = v.iter().map(|x| f64::from(*x) * f64::from(*x)).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for x in &mut v {
                        *x = (f64::from(*x) / norm) as f32;
                    }
                }
                v
            })
            .collect())
    }
}

/// Pairwise similarity summary over all (prompt, scenario) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub embedder_id: String,
    pub n_prompts: usize,
    pub n_scenarios: usize,
    pub n_pairs: usize,
    pub max_similarity: f64,
    pub mean_similarity: f64,
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot += f64::from(x) * f64::from(y);
        na += f64::from(x) * f64::from(x);
        nb += f64::from(y) * f64::from(y);
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb).sqrt()
    }
}

/// Compare every extraction prompt against every benchmark scenario.
pub fn leakage_check(
    extraction_prompts: &[String],
    scenarios: &[String],
    embedder: &dyn TextEmbedder,
) -> Result<LeakageReport> {
    if extraction_prompts.is_empty() {
        return Err(Error::Precondition("no extraction prompts".into()));
    }
    if scenarios.is_empty() {
        return Err(Error::Precondition("no scenarios".into()));
    }
    let prompt_vecs = embedder.embed(extraction_prompts)?;
    let scenario_vecs = embedder.embed(scenarios)?;
    let mut max_similarity = f64::NEG_INFINITY;
    let mut total = 0.0f64;
    for p in &prompt_vecs {
        for s in &scenario_vecs {
            let sim = cosine(p, s);
            max_similarity = max_similarity.max(sim);
            total += sim;
        }
    }
    let n_pairs = prompt_vecs.len() * scenario_vecs.len();
    Ok(LeakageReport {
        embedder_id: embedder.id(),
        n_prompts: extraction_prompts.len(),
        n_scenarios: scenarios.len(),
        n_pairs,
        max_similarity,
        mean_similarity: total / n_pairs as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_text_has_unit_self_similarity() {
        let text = vec!["How would you plan an important project deadline?".to_string()];
        let report = leakage_check(&text, &text, &HashEmbedder::default()).unwrap();
        assert!((report.max_similarity - 1.0).abs() < 1e-6);
        assert_eq!(report.n_pairs, 1);
    }

    #[test]
    fn disjoint_vocabulary_scores_near_zero() {
        let prompts = vec!["quantum flux capacitors hum quietly".to_string()];
        let scenarios = vec!["your bakery order arrived late again".to_string()];
        let report = leakage_check(&prompts, &scenarios, &HashEmbedder::default()).unwrap();
        assert!(report.max_similarity < 0.2, "got {}", report.max_similarity);
    }

    #[test]
    fn empty_scenario_set_is_a_precondition_error() {
        let prompts = vec!["anything".to_string()];
        assert!(matches!(
            leakage_check(&prompts, &[], &HashEmbedder::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn report_counts_all_pairs() {
        let prompts: Vec<String> = (0..4).map(|i| format!("prompt number {i}")).collect();
        let scenarios: Vec<String> = (0..3).map(|i| format!("scenario number {i}")).collect();
        let report = leakage_check(&prompts, &scenarios, &HashEmbedder::default()).unwrap();
        assert_eq!(report.n_pairs, 12);
        assert!(report.mean_similarity <= report.max_similarity);
    }
}
