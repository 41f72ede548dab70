use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pair::{SentencePair, ShiftType};

use super::matcher::{match_shift_pattern, ShiftMatch};
use super::realize::realize_pair;
use super::tree::ParseNode;

/// Automated stand-ins for manual quality inspection of mined pairs.
#[derive(Debug, Clone)]
pub struct QualityFilter {
    pub max_constituent_words: usize,
    /// Lemmas allowed as head verbs; `None` admits every verb.
    pub verb_allowlist: Option<BTreeSet<String>>,
}

impl Default for QualityFilter {
    fn default() -> Self {
        QualityFilter { max_constituent_words: 25, verb_allowlist: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    EmptyCategory,
    QuotationOnly,
    TooLong(usize),
    VerbNotAllowed(String),
    Unrealizable(String),
}

fn is_quoted(node: &ParseNode) -> bool {
    let toks = node.yield_tokens();
    matches!(
        (toks.first(), toks.last()),
        (Some(&"``") | Some(&"\""), Some(&"''") | Some(&"\""))
    )
}

impl QualityFilter {
    pub fn check(&self, m: &ShiftMatch<'_>) -> Result<(), Rejection> {
        for c in [m.constituent_a, m.constituent_b] {
            if c.contains_empty_category() {
                return Err(Rejection::EmptyCategory);
            }
            if is_quoted(c) {
                return Err(Rejection::QuotationOnly);
            }
            if c.span.len() > self.max_constituent_words {
                return Err(Rejection::TooLong(c.span.len()));
            }
        }
        if let Some(allow) = &self.verb_allowlist {
            if !allow.contains(&m.verb_lemma) {
                return Err(Rejection::VerbNotAllowed(m.verb_lemma.clone()));
            }
        }
        Ok(())
    }
}

/// Every realizable, filter-passing pair for `shift` in corpus order. Ids are
/// `"ptb-{tree:05}-{SHIFT}:{a.start}-{b.end}"`.
pub fn realize_all(trees: &[ParseNode], shift: ShiftType, filter: &QualityFilter) -> Vec<SentencePair> {
    let mut out = Vec::new();
    for (ti, tree) in trees.iter().enumerate() {
        for m in match_shift_pattern(tree, shift) {
            if filter.check(&m).is_err() {
                continue;
            }
            let Ok(mut pair) = realize_pair(&m) else { continue };
            pair.id = format!("ptb-{ti:05}-{}", pair.id);
            out.push(pair);
        }
    }
    out
}

/// Mines pairs with the default quality filter.
pub fn mine(trees: &[ParseNode], shift: ShiftType, sample_size: usize, seed: u64) -> Vec<SentencePair> {
    mine_with(trees, shift, sample_size, seed, &QualityFilter::default())
}

/// Uniform sample without replacement of the realized pairs, returned in
/// corpus order. Fewer candidates than `sample_size` returns them all.
pub fn mine_with(
    trees: &[ParseNode],
    shift: ShiftType,
    sample_size: usize,
    seed: u64,
    filter: &QualityFilter,
) -> Vec<SentencePair> {
    let mut all = realize_all(trees, shift, filter);
    if all.len() <= sample_size {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = rand::seq::index::sample(&mut rng, all.len(), sample_size).into_vec();
    keep.sort_unstable();
    let mut keep = keep.into_iter().peekable();
    let mut idx = 0;
    all.retain(|_| {
        let hit = keep.peek() == Some(&idx);
        if hit {
            keep.next();
        }
        idx += 1;
        hit
    });
    all
}
