use std::collections::HashMap;

use super::{ScoredSequence, ScoringBackend, ScoringError, Tokenizer};
use crate::weights::word_tokens;

const BOS: u32 = 0;
const UNK: u32 = 1;
const FIRST_WORD: u32 = 2;

/// Lowercased word tokens as seen by the n-gram model. Punctuation-only
/// tokens are dropped, so token counts agree with word length.
pub fn ngram_tokens(text: &str) -> Vec<String> {
    word_tokens(text).map(|w| w.to_lowercase()).collect()
}

/// Word n-gram model with additive (Lidstone) smoothing and one shared
/// unknown-word class:
///
/// `P(w | ctx) = (c(ctx, w) + δ) / (c(ctx) + δ (|V| + 1))`
///
/// Each sentence is left-padded with `order - 1` start markers that act
/// only as context.
#[derive(Debug, Clone)]
pub struct NGramLM {
    order: usize,
    delta: f64,
    vocab: HashMap<String, u32>,
    counts: HashMap<Vec<u32>, HashMap<u32, u64>>,
    totals: HashMap<Vec<u32>, u64>,
}

pub fn train_ngram<S: AsRef<str>>(corpus: &[S], order: usize, delta: f64) -> Result<NGramLM, ScoringError> {
    if !(1..=3).contains(&order) {
        return Err(ScoringError::InvalidOrder(order));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ScoringError::InvalidDelta(delta));
    }
    let mut lm = NGramLM {
        order,
        delta,
        vocab: HashMap::new(),
        counts: HashMap::new(),
        totals: HashMap::new(),
    };
    let mut seen_any = false;
    for sentence in corpus {
        let words = ngram_tokens(sentence.as_ref());
        if words.is_empty() {
            continue;
        }
        seen_any = true;
        let mut ids = vec![BOS; order - 1];
        for w in &words {
            let next = FIRST_WORD + lm.vocab.len() as u32;
            ids.push(*lm.vocab.entry(w.clone()).or_insert(next));
        }
        for win in ids.windows(order) {
            let (ctx, w) = win.split_at(order - 1);
            *lm.counts.entry(ctx.to_vec()).or_default().entry(w[0]).or_insert(0) += 1;
            *lm.totals.entry(ctx.to_vec()).or_insert(0) += 1;
        }
    }
    if !seen_any {
        return Err(ScoringError::EmptyCorpus);
    }
    Ok(lm)
}

impl NGramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn id(&self, word: &str) -> u32 {
        self.vocab.get(word).copied().unwrap_or(UNK)
    }

    fn prob_ids(&self, ctx: &[u32], w: u32) -> f64 {
        let c = self.counts.get(ctx).and_then(|m| m.get(&w)).copied().unwrap_or(0) as f64;
        let t = self.totals.get(ctx).copied().unwrap_or(0) as f64;
        (c + self.delta) / (t + self.delta * (self.vocab.len() as f64 + 1.0))
    }

    /// `P(word | context)` where `context` holds the preceding words (only
    /// the last `order - 1` matter; missing positions are start markers).
    /// Unknown words share one class.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let need = self.order - 1;
        let mut ctx = vec![BOS; need.saturating_sub(context.len())];
        let from = context.len().saturating_sub(need);
        ctx.extend(context[from..].iter().map(|w| self.id(&w.to_lowercase())));
        self.prob_ids(&ctx, self.id(&word.to_lowercase()))
    }

    /// Sum over the vocabulary plus the unknown class of `P(· | context)`.
    pub fn total_mass(&self, context: &[&str]) -> f64 {
        let mut words: Vec<&str> = self.vocab.keys().map(String::as_str).collect();
        words.push("\u{0}unk");
        words.iter().map(|w| self.prob(context, w)).sum()
    }
}

impl Tokenizer for NGramLM {
    fn tokenizer_id(&self) -> String {
        "word".to_string()
    }

    fn count_tokens(&self, constituent: &str) -> Result<usize, ScoringError> {
        Ok(ngram_tokens(constituent).len())
    }
}

impl ScoringBackend for NGramLM {
    fn backend_id(&self) -> String {
        format!("ngram{}-d{}", self.order, self.delta)
    }

    fn score(&self, text: &str) -> Result<ScoredSequence, ScoringError> {
        let tokens = ngram_tokens(text);
        let mut ids = vec![BOS; self.order - 1];
        ids.extend(tokens.iter().map(|t| self.id(t)));
        let logprobs = ids
            .windows(self.order)
            .map(|win| {
                let (ctx, w) = win.split_at(self.order - 1);
                self.prob_ids(ctx, w[0]).ln()
            })
            .collect();
        ScoredSequence::new(&self.backend_id(), text, tokens, logprobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigram_hand_computed_probability() {
        // |V| = 2, c(a b) = 1, c(a) = 1, delta = 1  ->  2 / (1 + 3)
        let lm = train_ngram(&["a b"], 2, 1.0).unwrap();
        assert_eq!(lm.vocab_size(), 2);
        assert!((lm.prob(&["a"], "b") - 2.0 / 4.0).abs() < 1e-15);
        assert!((lm.prob(&["a"], "a") - 1.0 / 4.0).abs() < 1e-15);
        assert!((lm.prob(&["b"], "a") - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn conditionals_normalize() {
        let lm = train_ngram(&["the cat sat", "the dog sat down", "a cat ran"], 3, 0.3).unwrap();
        for ctx in [&[][..], &["the"][..], &["the", "cat"][..], &["zzz", "cat"][..]] {
            assert!((lm.total_mass(ctx) - 1.0).abs() < 1e-9, "{ctx:?}");
        }
    }

    #[test]
    fn large_delta_approaches_uniform() {
        let lm = train_ngram(&["x y z", "x x y"], 2, 1e9).unwrap();
        let uniform = 1.0 / 4.0;
        assert!((lm.prob(&["x"], "y") - uniform).abs() < 1e-8);
        assert!((lm.prob(&["x"], "q") - uniform).abs() < 1e-8);
    }

    #[test]
    fn doubled_corpus_equals_half_delta() {
        // (2c + d) / (2t + d(V+1)) == (c + d/2) / (t + (d/2)(V+1))
        let corpus = ["the cat sat", "the dog sat down"];
        let doubled: Vec<&str> = corpus.iter().chain(corpus.iter()).copied().collect();
        let twice = train_ngram(&doubled, 2, 1.0).unwrap();
        let half = train_ngram(&corpus, 2, 0.5).unwrap();
        for (ctx, w) in [("the", "cat"), ("sat", "down"), ("dog", "the"), ("cat", "unseen")] {
            assert!((twice.prob(&[ctx], w) - half.prob(&[ctx], w)).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_parameters() {
        assert_eq!(train_ngram(&["a"], 4, 1.0).unwrap_err(), ScoringError::InvalidOrder(4));
        assert!(matches!(train_ngram(&["a"], 2, 0.0), Err(ScoringError::InvalidDelta(_))));
        assert_eq!(train_ngram::<&str>(&[], 2, 1.0).unwrap_err(), ScoringError::EmptyCorpus);
        assert_eq!(train_ngram(&[" . "], 2, 1.0).unwrap_err(), ScoringError::EmptyCorpus);
    }

    #[test]
    fn start_padding_is_not_scored() {
        let lm = train_ngram(&["a b"], 2, 1.0).unwrap();
        let s = lm.score("a b").unwrap();
        assert_eq!(s.tokens, vec!["a", "b"]);
        // P(a | <s>) = 2/4, P(b | a) = 2/4
        assert!((s.m_score - 2.0 * (0.5f64).ln()).abs() < 1e-12);
    }
}
