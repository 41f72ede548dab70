//! Constituent weight measures and relative-weight ratios.
//!
//! Four measures are supported: word count, syllable count (heuristic),
//! token count under a given tokenizer, and modifier count plus one for
//! generated constituents. A pair's ratio for a measure is
//! `weight(first constituent) / weight(second constituent)` in unshifted
//! order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pair::SentencePair;
use crate::scoring::{ScoringError, Tokenizer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("constituent text is empty")]
    EmptyText,
    #[error("constituent {0:?} contains no words")]
    NoWords(String),
    #[error("zero denominator in {0} ratio")]
    ZeroDenominator(&'static str),
    #[error("tokenizer failed: {0}")]
    Tokenizer(#[from] ScoringError),
}

/// Whitespace tokens with punctuation trimmed from both edges; tokens with no
/// alphabetic character are skipped.
pub fn word_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| t.chars().any(char::is_alphabetic))
}

pub fn word_length(text: &str) -> Result<u32, WeightError> {
    if text.trim().is_empty() {
        return Err(WeightError::EmptyText);
    }
    match word_tokens(text).count() {
        0 => Err(WeightError::NoWords(text.to_string())),
        n => Ok(n as u32),
    }
}

fn is_plain_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Heuristic syllable count of one word.
///
/// Counts maximal vowel groups over `aeiou`, with `y` a vowel except in
/// first position. A final `e` that follows a consonant is treated as silent
/// and removed, except in a consonant + `le` ending. The result is at least 1
/// for any word containing a letter and 0 otherwise.
pub fn syllable_count(word: &str) -> u32 {
    let w: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if w.is_empty() {
        return 0;
    }
    let vowel = |i: usize| is_plain_vowel(w[i]) || (w[i] == 'y' && i > 0);
    let mut groups = 0u32;
    let mut prev = false;
    for i in 0..w.len() {
        let v = vowel(i);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let n = w.len();
    if n >= 2 && w[n - 1] == 'e' && !vowel(n - 2) {
        let consonant_le = n >= 3 && w[n - 2] == 'l' && !vowel(n - 3);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

pub fn syllable_weight(text: &str) -> Result<u32, WeightError> {
    word_length(text)?;
    Ok(word_tokens(text).map(syllable_count).sum())
}

/// Token count of a constituent under `tokenizer`. Backend failures are
/// returned as errors.
pub fn token_length(text: &str, tokenizer: &dyn Tokenizer) -> Result<u32, WeightError> {
    if text.trim().is_empty() {
        return Err(WeightError::EmptyText);
    }
    Ok(tokenizer.count_tokens(text)? as u32)
}

/// An unreduced ratio of two counts, compared exactly.
#[derive(Debug, Clone, Copy, Eq)]
pub struct WeightRatio {
    pub numerator: u32,
    pub denominator: u32,
}

impl WeightRatio {
    pub fn new(numerator: u32, denominator: u32) -> Self {
        WeightRatio { numerator, denominator }
    }

    pub fn value(self) -> f64 {
        f64::from(self.numerator) / f64::from(self.denominator)
    }

    pub fn inverse(self) -> Self {
        WeightRatio::new(self.denominator, self.numerator)
    }
}

impl PartialEq for WeightRatio {
    fn eq(&self, other: &Self) -> bool {
        u64::from(self.numerator) * u64::from(other.denominator)
            == u64::from(other.numerator) * u64::from(self.denominator)
    }
}

impl fmt::Display for WeightRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub word_length: u32,
    pub syllable_weight: u32,
    /// Keyed by tokenizer id.
    #[serde(default)]
    pub token_length: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modifier_weight: Option<u32>,
}

impl WeightProfile {
    pub fn measure(
        text: &str,
        tokenizers: &[&dyn Tokenizer],
        modifier_weight: Option<u32>,
    ) -> Result<Self, WeightError> {
        let mut tokens = BTreeMap::new();
        for t in tokenizers {
            tokens.insert(t.tokenizer_id(), token_length(text, *t)?);
        }
        Ok(WeightProfile {
            word_length: word_length(text)?,
            syllable_weight: syllable_weight(text)?,
            token_length: tokens,
            modifier_weight,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioProfile {
    pub word: f64,
    pub syllable: f64,
    #[serde(default)]
    pub token: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modifier: Option<f64>,
}

/// A weight measure usable as a regression predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Token,
    Word,
    Syllable,
    Modifier,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Token, Metric::Word, Metric::Syllable, Metric::Modifier];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Token => "token",
            Metric::Word => "word",
            Metric::Syllable => "syllable",
            Metric::Modifier => "modifier",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown metric {s:?} (expected token, word, syllable or modifier)"))
    }
}

impl RatioProfile {
    /// The ratio for `metric`. For token ratios, `tokenizer` selects the
    /// entry; without it the profile must hold exactly one token ratio.
    pub fn get(&self, metric: Metric, tokenizer: Option<&str>) -> Option<f64> {
        match metric {
            Metric::Word => Some(self.word),
            Metric::Syllable => Some(self.syllable),
            Metric::Modifier => self.modifier,
            Metric::Token => match tokenizer {
                Some(id) => self.token.get(id).copied(),
                None if self.token.len() == 1 => self.token.values().next().copied(),
                None => None,
            },
        }
    }
}

fn exact(name: &'static str, a: u32, b: u32) -> Result<WeightRatio, WeightError> {
    if b == 0 {
        return Err(WeightError::ZeroDenominator(name));
    }
    Ok(WeightRatio::new(a, b))
}

pub fn word_ratio(a: &WeightProfile, b: &WeightProfile) -> Result<WeightRatio, WeightError> {
    exact("word", a.word_length, b.word_length)
}

pub fn syllable_ratio(a: &WeightProfile, b: &WeightProfile) -> Result<WeightRatio, WeightError> {
    exact("syllable", a.syllable_weight, b.syllable_weight)
}

/// Per-metric ratios `a / b`. Token ratios are formed for tokenizers present
/// in both profiles; the modifier ratio only when both sides carry one.
pub fn ratios(a: &WeightProfile, b: &WeightProfile) -> Result<RatioProfile, WeightError> {
    let mut token = BTreeMap::new();
    for (id, &ta) in &a.token_length {
        if let Some(&tb) = b.token_length.get(id) {
            token.insert(id.clone(), exact("token", ta, tb)?.value());
        }
    }
    let modifier = match (a.modifier_weight, b.modifier_weight) {
        (Some(ma), Some(mb)) => Some(exact("modifier", ma, mb)?.value()),
        _ => None,
    };
    Ok(RatioProfile {
        word: word_ratio(a, b)?.value(),
        syllable: syllable_ratio(a, b)?.value(),
        token,
        modifier,
    })
}

/// Fills in `weights_a`, `weights_b` and `ratios` on a pair. Generated pairs
/// take their modifier weights from the generation metadata.
pub fn annotate(pair: &SentencePair, tokenizers: &[&dyn Tokenizer]) -> Result<SentencePair, WeightError> {
    let (ma, mb) = match &pair.synthetic {
        Some(m) => (Some(m.modifier_weight_a), Some(m.modifier_weight_b)),
        None => (None, None),
    };
    let wa = WeightProfile::measure(&pair.constituent_a().text, tokenizers, ma)?;
    let wb = WeightProfile::measure(&pair.constituent_b().text, tokenizers, mb)?;
    let mut out = pair.clone();
    out.ratios = Some(ratios(&wa, &wb)?);
    out.weights_a = Some(wa);
    out.weights_b = Some(wb);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::WhitespaceTokenizer;

    const SHORT: &str = "with her grandmother";
    const LONG: &str = "around the decorated entryway garden with the large fountain";

    #[test]
    fn word_lengths() {
        assert_eq!(word_length(SHORT).unwrap(), 3);
        assert_eq!(word_length(LONG).unwrap(), 9);
        assert_eq!(word_length("up").unwrap(), 1);
        assert_eq!(word_length("the man , who left .").unwrap(), 4);
        assert_eq!(word_length("  "), Err(WeightError::EmptyText));
        assert!(matches!(word_length("1990 ."), Err(WeightError::NoWords(_))));
    }

    #[test]
    fn syllables_on_reference_phrases() {
        assert_eq!(syllable_weight(SHORT).unwrap(), 5);
        assert_eq!(syllable_weight(LONG).unwrap(), 17);
        assert_eq!(syllable_count("decorated"), 4);
        assert_eq!(syllable_count("entryway"), 3);
        assert_eq!(syllable_count("a"), 1);
        assert_eq!(syllable_count("42"), 0);
    }

    #[test]
    fn silent_e_rules() {
        assert_eq!(syllable_count("the"), 1);
        assert_eq!(syllable_count("large"), 1);
        assert_eq!(syllable_count("table"), 2);
        assert_eq!(syllable_count("whale"), 1);
        assert_eq!(syllable_count("free"), 1);
        assert_eq!(syllable_count("movie"), 2);
        assert_eq!(syllable_count("Yellow"), 2);
    }

    #[test]
    fn exact_ratio_comparison() {
        let s = WeightProfile::measure(SHORT, &[], None).unwrap();
        let l = WeightProfile::measure(LONG, &[], None).unwrap();
        assert_eq!(word_ratio(&s, &s).unwrap(), WeightRatio::new(1, 1));
        assert_eq!(word_ratio(&s, &l).unwrap(), WeightRatio::new(1, 3));
        assert_eq!(syllable_ratio(&s, &l).unwrap(), WeightRatio::new(5, 17));
        assert_ne!(syllable_ratio(&s, &l).unwrap(), WeightRatio::new(1, 3));
    }

    #[test]
    fn ratios_omit_one_sided_metrics() {
        let tok = WhitespaceTokenizer;
        let a = WeightProfile::measure(SHORT, &[&tok], Some(2)).unwrap();
        let b = WeightProfile::measure(LONG, &[], Some(4)).unwrap();
        let r = ratios(&a, &b).unwrap();
        assert!(r.token.is_empty());
        assert_eq!(r.modifier, Some(0.5));
        assert_eq!(r.get(Metric::Token, None), None);
        let both = ratios(&a, &a).unwrap();
        assert_eq!(both.get(Metric::Token, None), Some(1.0));
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("tokens".parse::<Metric>().is_err());
    }
}
