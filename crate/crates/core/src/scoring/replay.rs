use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScoredSequence, ScoringBackend, ScoringError, Tokenizer};
use crate::jsonl::read_jsonl;

/// One recorded backend response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedLogprobs {
    pub text: String,
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
    pub backend_id: String,
    /// Whether the first logprob belongs to a beginning-of-sequence token.
    #[serde(default)]
    pub bos_included: bool,
}

/// Serves scores from a recorded fixture. Unknown texts are an error, never
/// a fallback.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    backend_id: String,
    bos_included: bool,
    records: HashMap<String, RecordedLogprobs>,
}

impl ReplayBackend {
    pub fn from_records(records: Vec<RecordedLogprobs>) -> Result<Self, ScoringError> {
        let first = records.first().ok_or_else(|| ScoringError::Unavailable {
            backend: "replay".into(),
            message: "fixture has no records".into(),
        })?;
        let backend_id = first.backend_id.clone();
        let bos_included = first.bos_included;
        if let Some(other) = records.iter().find(|r| r.backend_id != backend_id) {
            return Err(ScoringError::Unavailable {
                backend: "replay".into(),
                message: format!("fixture mixes backends {backend_id:?} and {:?}", other.backend_id),
            });
        }
        let records = records.into_iter().map(|r| (r.text.clone(), r)).collect();
        Ok(ReplayBackend { backend_id, bos_included, records })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScoringError> {
        let records = read_jsonl(path).map_err(|e| ScoringError::Unavailable {
            backend: "replay".into(),
            message: e.to_string(),
        })?;
        Self::from_records(records)
    }

    fn lookup(&self, text: &str) -> Result<&RecordedLogprobs, ScoringError> {
        self.records.get(text).ok_or_else(|| ScoringError::Missing {
            backend: self.backend_id.clone(),
            text: text.to_string(),
        })
    }
}

impl Tokenizer for ReplayBackend {
    fn tokenizer_id(&self) -> String {
        self.backend_id.clone()
    }

    fn count_tokens(&self, constituent: &str) -> Result<usize, ScoringError> {
        let n = self.lookup(&format!(" {constituent}"))?.tokens.len();
        Ok(n - usize::from(self.bos_included && n > 0))
    }
}

impl ScoringBackend for ReplayBackend {
    fn backend_id(&self) -> String {
        self.backend_id.clone()
    }

    fn score(&self, text: &str) -> Result<ScoredSequence, ScoringError> {
        let r = self.lookup(text)?;
        ScoredSequence::new(&self.backend_id, text, r.tokens.clone(), r.logprobs.clone())
    }
}
