// SPDX-License-Identifier: MIT OR Apache-2.0

//! Client for external LLM judges and generators.
//!
//! One [`JudgeClient`] wraps a transport with disk caching, bounded
//! concurrency, retry with exponential backoff, and deterministic verdict
//! parsing. The same client doubles as the "generator LLM" handle used by the
//! extraction and benchmark pipelines (via [`JudgeClient::complete`]).
//!
//! Environment: `PERSONA_JUDGE_API_KEY` and `PERSONA_JUDGE_BASE_URL` configure
//! the HTTP transport.

mod parse;
mod templates;
mod transport;

pub(crate) use parse::first_json_object;
pub use parse::{parse_likert, parse_pairwise_choices, parse_trait_score, TraitParse};
pub use templates::PairwiseTask;
pub use transport::{JudgeTransport, ScriptedTransport, TransportError, TransportRequest};

#[cfg(feature = "http")]
pub use transport::HttpTransport;

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const JUDGE_API_KEY_VAR: &str = "PERSONA_JUDGE_API_KEY";
pub const JUDGE_BASE_URL_VAR: &str = "PERSONA_JUDGE_BASE_URL";

/// Judge/generator client settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeConfig {
    pub model: String,
    pub temperature: f32,
    pub max_retries: usize,
    pub concurrency_limit: usize,
    pub cache_dir: Option<PathBuf>,
    pub max_tokens: Option<usize>,
    /// Always show the steered response first, with condition labels.
    /// Default is seeded random presentation order with unlabeled responses.
    pub fixed_order: bool,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            model: "gpt-4.1-mini".into(),
            temperature: 0.0,
            max_retries: 3,
            concurrency_limit: 4,
            cache_dir: None,
            max_tokens: None,
            fixed_order: false,
            backoff_base_ms: 1000,
            backoff_cap_ms: 30_000,
        }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature < 0.0 {
            return Err(Error::Config("judge temperature must be >= 0".into()));
        }
        if self.concurrency_limit == 0 {
            return Err(Error::Config("concurrency_limit must be >= 1".into()));
        }
        Ok(())
    }
}

/// Verdict of the 0-100 trait rubric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitVerdict {
    pub kind: TraitVerdictKind,
    pub raw_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitVerdictKind {
    Score(u8),
    Refusal,
    Malformed,
}

/// Verdict of the 1-5 Likert rubric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LikertVerdict {
    Score(u8),
    Malformed { raw_text: String },
}

/// Raw A/B choice as emitted by the judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

/// Which response was shown as "Response A".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentationOrder {
    SteeredFirst,
    VanillaFirst,
}

/// The five ranked criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    TraitAdherence,
    RoleConsistency,
    ResponseAppropriateness,
    Insightfulness,
    Overall,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::TraitAdherence,
        Criterion::RoleConsistency,
        Criterion::ResponseAppropriateness,
        Criterion::Insightfulness,
        Criterion::Overall,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Criterion::TraitAdherence => "TA",
            Criterion::RoleConsistency => "RC",
            Criterion::ResponseAppropriateness => "RA",
            Criterion::Insightfulness => "IF",
            Criterion::Overall => "Overall",
        }
    }
}

/// Which pipeline's response won a criterion, after de-biasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Steered,
    Vanilla,
}

/// Parsed pairwise ranking: raw per-criterion choices, the judge's reasoning,
/// and the presentation order needed to map choices back to sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseVerdict {
    pub trait_adherence: Choice,
    pub role_consistency: Choice,
    pub response_appropriateness: Choice,
    pub insightfulness: Choice,
    pub overall: Choice,
    pub reasoning: String,
    pub presentation_order: PresentationOrder,
}

impl PairwiseVerdict {
    pub fn choice(&self, criterion: Criterion) -> Choice {
        match criterion {
            Criterion::TraitAdherence => self.trait_adherence,
            Criterion::RoleConsistency => self.role_consistency,
            Criterion::ResponseAppropriateness => self.response_appropriateness,
            Criterion::Insightfulness => self.insightfulness,
            Criterion::Overall => self.overall,
        }
    }

    /// Map the raw choice back to {steered, vanilla} using the recorded
    /// presentation order.
    pub fn winner(&self, criterion: Criterion) -> Side {
        match (self.choice(criterion), self.presentation_order) {
            (Choice::A, PresentationOrder::SteeredFirst) => Side::Steered,
            (Choice::B, PresentationOrder::SteeredFirst) => Side::Vanilla,
            (Choice::A, PresentationOrder::VanillaFirst) => Side::Vanilla,
            (Choice::B, PresentationOrder::VanillaFirst) => Side::Steered,
        }
    }
}

/// Counting semaphore bounding in-flight transport calls.
struct Limiter {
    available: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(permits: usize) -> Self {
        Limiter {
            available: Mutex::new(permits),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> LimiterGuard<'_> {
        let mut available = self.available.lock().expect("limiter poisoned");
        while *available == 0 {
            available = self.cv.wait(available).expect("limiter poisoned");
        }
        *available -= 1;
        LimiterGuard { limiter: self }
    }
}

struct LimiterGuard<'a> {
    limiter: &'a Limiter,
}

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        let mut available = self.limiter.available.lock().expect("limiter poisoned");
        *available += 1;
        self.limiter.cv.notify_one();
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    response: String,
}

/// The judge/generator client. Thread-safe; share with `&` across threads.
pub struct JudgeClient {
    config: JudgeConfig,
    transport: Box<dyn JudgeTransport>,
    limiter: Limiter,
}

impl JudgeClient {
    pub fn new(config: JudgeConfig, transport: Box<dyn JudgeTransport>) -> Result<Self> {
        config.validate()?;
        let limiter = Limiter::new(config.concurrency_limit);
        Ok(JudgeClient {
            config,
            transport,
            limiter,
        })
    }

    /// HTTP client configured from `PERSONA_JUDGE_BASE_URL` and
    /// `PERSONA_JUDGE_API_KEY`. Fails before any network call when the key is
    /// absent.
    #[cfg(feature = "http")]
    pub fn from_env(config: JudgeConfig, debug: bool) -> Result<Self> {
        let key = std::env::var(JUDGE_API_KEY_VAR)
            .map_err(|_| Error::AuthFailure(format!("{JUDGE_API_KEY_VAR} is not set")))?;
        let base_url = std::env::var(JUDGE_BASE_URL_VAR)
            .map_err(|_| Error::AuthFailure(format!("{JUDGE_BASE_URL_VAR} is not set")))?;
        Self::new(config, Box::new(HttpTransport::new(base_url, key, debug)))
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.config
    }

    fn cache_key(&self, system: &str, user: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.config.model.as_bytes());
        hasher.update(self.config.temperature.to_le_bytes());
        hasher.update([0u8]);
        hasher.update(system.as_bytes());
        hasher.update([0u8]);
        hasher.update(user.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn cache_read(&self, key: &str) -> Option<String> {
        let dir = self.config.cache_dir.as_ref()?;
        let path = dir.join(format!("{key}.json"));
        let bytes = std::fs::read(path).ok()?;
        serde_json::from_slice::<CacheEntry>(&bytes)
            .ok()
            .map(|e| e.response)
    }

    fn cache_write(&self, key: &str, response: &str) {
        let Some(dir) = self.config.cache_dir.as_ref() else {
            return;
        };
        if std::fs::create_dir_all(dir).is_err() {
            return;
        }
        let final_path = dir.join(format!("{key}.json"));
        let tmp_path = dir.join(format!("{key}.tmp-{}", std::process::id()));
        let entry = CacheEntry {
            response: response.to_string(),
        };
        if let Ok(json) = serde_json::to_vec(&entry) {
            // Write-then-rename keeps concurrent readers off partial files.
            if std::fs::write(&tmp_path, json).is_ok() {
                let _ = std::fs::rename(&tmp_path, &final_path);
            }
        }
    }

    fn backoff(&self, attempt: usize) -> Duration {
        let base = self.config.backoff_base_ms.saturating_mul(1u64 << attempt.min(16));
        let capped = base.min(self.config.backoff_cap_ms);
        let jitter = if capped == 0 {
            0
        } else {
            rand::thread_rng().gen_range(0..=capped / 2)
        };
        Duration::from_millis(capped / 2 + jitter)
    }

    fn call_transport(&self, system: &str, user: &str) -> Result<String> {
        let request = TransportRequest {
            model: self.config.model.clone(),
            system: system.to_string(),
            user: user.to_string(),
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let mut attempt = 0usize;
        loop {
            let outcome = {
                let _permit = self.limiter.acquire();
                self.transport.complete(&request)
            };
            match outcome {
                Ok(text) => return Ok(text),
                Err(e) if e.auth => return Err(Error::AuthFailure(e.message)),
                Err(e) if e.retryable && attempt < self.config.max_retries => {
                    std::thread::sleep(self.backoff(attempt));
                    attempt += 1;
                }
                Err(e) if e.retryable => {
                    return Err(Error::ExhaustedRetries {
                        attempts: attempt + 1,
                        last_error: e.message,
                    })
                }
                Err(e) => return Err(Error::GeneratorFailure(e.message)),
            }
        }
    }

    /// Raw completion with caching and retries. Cached by
    /// `(model, temperature, system, user)`.
    pub fn complete(&self, system: &str, user: &str) -> Result<String> {
        let key = self.cache_key(system, user);
        if let Some(cached) = self.cache_read(&key) {
            return Ok(cached);
        }
        let text = self.call_transport(system, user)?;
        self.cache_write(&key, &text);
        Ok(text)
    }

    /// Completion that bypasses the cache; used for re-asks after a malformed
    /// reply, which at temperature 0 would otherwise replay the same text.
    pub fn complete_uncached(&self, system: &str, user: &str) -> Result<String> {
        self.call_transport(system, user)
    }

    /// Score one answer on the 0-100 trait rubric. An unparsable or
    /// out-of-range reply triggers exactly one re-ask before the verdict is
    /// marked malformed.
    pub fn score_trait(&self, rubric: &str, question: &str, answer: &str) -> Result<TraitVerdict> {
        if rubric.trim().is_empty() {
            return Err(Error::Precondition("rubric must be non-empty".into()));
        }
        let prompt = templates::trait_score_prompt(rubric, question, answer);
        let first = self.complete("", &prompt)?;
        match parse_trait_score(&first) {
            TraitParse::Score(score) => Ok(TraitVerdict {
                kind: TraitVerdictKind::Score(score),
                raw_text: first,
            }),
            TraitParse::Refusal => Ok(TraitVerdict {
                kind: TraitVerdictKind::Refusal,
                raw_text: first,
            }),
            TraitParse::Malformed => {
                let second = self.complete_uncached("", &prompt)?;
                let kind = match parse_trait_score(&second) {
                    TraitParse::Score(score) => TraitVerdictKind::Score(score),
                    TraitParse::Refusal => TraitVerdictKind::Refusal,
                    TraitParse::Malformed => TraitVerdictKind::Malformed,
                };
                Ok(TraitVerdict {
                    kind,
                    raw_text: second,
                })
            }
        }
    }

    /// Score one answer on the 1-5 Likert rubric; one re-ask, then malformed.
    pub fn score_likert(
        &self,
        trait_name: &str,
        dimension: &str,
        direction: &str,
        question: &str,
        answer: &str,
    ) -> Result<LikertVerdict> {
        let prompt = templates::likert_prompt(trait_name, dimension, direction, question, answer);
        let first = self.complete("", &prompt)?;
        if let Some(score) = parse_likert(&first) {
            return Ok(LikertVerdict::Score(score));
        }
        let second = self.complete_uncached("", &prompt)?;
        match parse_likert(&second) {
            Some(score) => Ok(LikertVerdict::Score(score)),
            None => Ok(LikertVerdict::Malformed { raw_text: second }),
        }
    }

    /// Rank a steered/vanilla pair on the five criteria.
    ///
    /// Presentation order is seeded-random per comparison (unless
    /// `fixed_order` reproduces the literal labeled protocol) and is recorded
    /// in the verdict so aggregation can de-bias.
    pub fn rank_pairwise(
        &self,
        task: &PairwiseTask,
        steered_text: &str,
        vanilla_text: &str,
        order_seed: u64,
    ) -> Result<PairwiseVerdict> {
        if steered_text.trim().is_empty() || vanilla_text.trim().is_empty() {
            return Err(Error::Precondition(
                "both responses must be non-empty".into(),
            ));
        }
        let steered_first =
            self.config.fixed_order || ChaCha8Rng::seed_from_u64(order_seed).gen_bool(0.5);
        let order = if steered_first {
            PresentationOrder::SteeredFirst
        } else {
            PresentationOrder::VanillaFirst
        };
        let (a, b) = match order {
            PresentationOrder::SteeredFirst => (steered_text, vanilla_text),
            PresentationOrder::VanillaFirst => (vanilla_text, steered_text),
        };
        let (label_a, label_b) = if self.config.fixed_order {
            (" (Steered)", " (Non-steered)")
        } else {
            ("", "")
        };
        let prompt = templates::pairwise_prompt(task, a, b, label_a, label_b);
        let first = self.complete("", &prompt)?;
        let choices = match parse_pairwise_choices(&first) {
            Some(c) => c,
            None => {
                let second = self.complete_uncached("", &prompt)?;
                parse_pairwise_choices(&second)
                    .ok_or_else(|| Error::MalformedVerdict(second.clone()))?
            }
        };
        let to_choice = |s: &str| {
            if s.trim().eq_ignore_ascii_case("a") {
                Choice::A
            } else {
                Choice::B
            }
        };
        Ok(PairwiseVerdict {
            trait_adherence: to_choice(&choices.trait_adherence),
            role_consistency: to_choice(&choices.role_consistency),
            response_appropriateness: to_choice(&choices.response_appropriateness),
            insightfulness: to_choice(&choices.insightfulness),
            overall: to_choice(&choices.overall),
            reasoning: choices.reasoning,
            presentation_order: order,
        })
    }
}
