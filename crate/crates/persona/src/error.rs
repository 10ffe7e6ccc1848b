// SPDX-License-Identifier: MIT OR Apache-2.0

//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the persona toolkit.
#[derive(Debug, Error)]
pub enum Error {
    // -- model gateway --
    #[error("model unavailable: {0}")]
    ModelUnavailable(String),
    #[error("context overflow: {needed} positions exceed the model maximum of {max}")]
    ContextOverflow { needed: usize, max: usize },
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("layer {layer} out of range (model has {num_layers} layers)")]
    LayerOutOfRange { layer: usize, num_layers: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backend does not support {0}")]
    CapabilityUnsupported(String),

    // -- vector store --
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("checksum mismatch in {path}: expected {expected}, got {got}")]
    ChecksumMismatch {
        path: String,
        expected: String,
        got: String,
    },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("incompatible library: {0}")]
    IncompatibleLibrary(String),

    // -- algebra --
    #[error("cannot unit-normalize a zero-norm vector")]
    ZeroNorm,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    // -- judge / generator clients --
    #[error("judge authentication failure: {0}")]
    AuthFailure(String),
    #[error("retries exhausted after {attempts} attempts: {last_error}")]
    ExhaustedRetries { attempts: usize, last_error: String },
    #[error("generator failure: {0}")]
    GeneratorFailure(String),
    #[error("malformed generator output after {attempts} attempts: {reason}")]
    MalformedAfterRetries { attempts: usize, reason: String },
    #[error("malformed judge verdict: {0}")]
    MalformedVerdict(String),

    // -- pipelines --
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty {side} side in contrastive batch")]
    EmptySide { side: &'static str },
    #[error("partial batch: generation failed for question {question} pair {pair} side {side}: {cause}")]
    PartialBatch {
        question: usize,
        pair: usize,
        side: &'static str,
        cause: String,
    },
    #[error("coefficient parse failure: {0}")]
    ParseFailure(String),

    // -- plumbing --
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
