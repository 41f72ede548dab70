//! Sequence log-probability scoring and pair preferences.
//!
//! A backend assigns every token of a text a natural-log conditional
//! probability; the sequence score is their sum and a pair's preference is
//! `score(unshifted) - score(shifted)`, positive when the unshifted order is
//! favoured.
//!
//! Backends shipped here:
//!
//! * [`NGramLM`]: additive-smoothing word n-gram model trained in process.
//!   The sentence-start padding is conditioning only and is never scored.
//! * [`HttpBackend`]: any server speaking the `{"text"}` →
//!   `{"tokens", "logprobs"}` contract, with an on-disk response cache.
//! * [`ReplayBackend`]: replays recorded responses from a JSON Lines fixture.
//! * [`UniformBackend`]: uniform word model, mostly for tests.

mod http;
mod ngram;
mod replay;

pub use http::{HttpBackend, HttpConfig, LogprobCache, ENV_LM_TOKEN, ENV_LM_URL};
pub use ngram::{ngram_tokens, train_ngram, NGramLM};
pub use replay::{RecordedLogprobs, ReplayBackend};

use serde::{Deserialize, Serialize};

use crate::pair::SentencePair;
use crate::weights::word_tokens;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("transport error from {endpoint}: {message}")]
    Transport {
        endpoint: String,
        message: String,
        retryable: bool,
    },
    #[error("protocol error from {backend}: {message}")]
    Protocol { backend: String, message: String },
    #[error("backend {backend} has no record for {text:?}")]
    Missing { backend: String, text: String },
    #[error("backend {backend} unavailable: {message}")]
    Unavailable { backend: String, message: String },
    #[error("cannot score empty text")]
    EmptyText,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be 1, 2 or 3 (got {0})")]
    InvalidOrder(usize),
    #[error("smoothing delta must be positive and finite (got {0})")]
    InvalidDelta(f64),
}

impl ScoringError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ScoringError::Transport { retryable: true, .. })
    }
}

/// A scored text: tokens with their natural-log conditional probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub text: String,
    pub tokens: Vec<String>,
    pub token_logprobs: Vec<f64>,
    pub m_score: f64,
}

impl ScoredSequence {
    /// Validates lengths and signs, then sums the log probabilities.
    pub fn new(
        backend: &str,
        text: impl Into<String>,
        tokens: Vec<String>,
        token_logprobs: Vec<f64>,
    ) -> Result<Self, ScoringError> {
        let protocol = |message: String| ScoringError::Protocol { backend: backend.to_string(), message };
        if tokens.len() != token_logprobs.len() {
            return Err(protocol(format!(
                "{} tokens but {} logprobs",
                tokens.len(),
                token_logprobs.len()
            )));
        }
        if let Some(lp) = token_logprobs.iter().find(|lp| !lp.is_finite() || **lp > 0.0) {
            return Err(protocol(format!("invalid log probability {lp}")));
        }
        let m_score = token_logprobs.iter().sum();
        Ok(ScoredSequence { text: text.into(), tokens, token_logprobs, m_score })
    }
}

/// Anything that can split a constituent into its own tokens.
pub trait Tokenizer: Send + Sync {
    fn tokenizer_id(&self) -> String;

    /// Number of tokens assigned to a constituent scored out of context.
    fn count_tokens(&self, constituent: &str) -> Result<usize, ScoringError>;
}

/// A language model that scores whole texts. Implementations take `&self`
/// and must be safe to share between scoring threads.
pub trait ScoringBackend: Tokenizer {
    fn backend_id(&self) -> String;

    fn score(&self, text: &str) -> Result<ScoredSequence, ScoringError>;
}

/// Scores `text` with `backend`, rejecting empty input.
pub fn score_sequence(backend: &dyn ScoringBackend, text: &str) -> Result<ScoredSequence, ScoringError> {
    if text.trim().is_empty() {
        return Err(ScoringError::EmptyText);
    }
    backend.score(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub pair_id: String,
    pub backend_id: String,
    #[serde(rename = "m_score_u")]
    pub m_score_unshifted: f64,
    #[serde(rename = "m_score_s")]
    pub m_score_shifted: f64,
    pub m_preference: f64,
}

/// Scores both orders of a pair. Either both scores succeed or an error is
/// returned; partial records are never produced.
pub fn preference(backend: &dyn ScoringBackend, pair: &SentencePair) -> Result<PreferenceRecord, ScoringError> {
    let u = score_sequence(backend, &pair.unshifted)?;
    let s = score_sequence(backend, &pair.shifted)?;
    Ok(PreferenceRecord {
        pair_id: pair.id.clone(),
        backend_id: backend.backend_id(),
        m_score_unshifted: u.m_score,
        m_score_shifted: s.m_score,
        m_preference: u.m_score - s.m_score,
    })
}

/// Splits on whitespace only.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenizer_id(&self) -> String {
        "whitespace".to_string()
    }

    fn count_tokens(&self, constituent: &str) -> Result<usize, ScoringError> {
        Ok(constituent.split_whitespace().count())
    }
}

/// Every word has probability `1 / vocab_size`.
#[derive(Debug, Clone, Copy)]
pub struct UniformBackend {
    pub vocab_size: usize,
}

impl Tokenizer for UniformBackend {
    fn tokenizer_id(&self) -> String {
        "word".to_string()
    }

    fn count_tokens(&self, constituent: &str) -> Result<usize, ScoringError> {
        Ok(word_tokens(constituent).count())
    }
}

impl ScoringBackend for UniformBackend {
    fn backend_id(&self) -> String {
        format!("uniform{}", self.vocab_size)
    }

    fn score(&self, text: &str) -> Result<ScoredSequence, ScoringError> {
        let tokens = ngram_tokens(text);
        let lp = -(self.vocab_size as f64).ln();
        let logprobs = vec![lp; tokens.len()];
        ScoredSequence::new(&self.backend_id(), text, tokens, logprobs)
    }
}
