//! Shared inputs for the pipeline benchmarks.

use shiftbench_core::analysis::{join_records, AnalysisRecord};
use shiftbench_core::generator::{expand, GenerationPlan, Lexicon};
use shiftbench_core::scoring::{preference, train_ngram, NGramLM, WhitespaceTokenizer};
use shiftbench_core::treebank::{parse_treebank, ParseNode};
use shiftbench_core::weights::annotate;
use shiftbench_core::{SentencePair, ShiftType};

const MINI_TREEBANK: &str = include_str!("../../core/data/mini_treebank.mrg");

/// The bundled twenty-tree sample, repeated `copies` times.
pub fn treebank(copies: usize) -> Vec<ParseNode> {
    let trees = parse_treebank(MINI_TREEBANK).expect("bundled treebank parses");
    trees.iter().cycle().take(trees.len() * copies).cloned().collect()
}

/// Weighed synthetic pairs for one shift type up to `max_level`.
pub fn weighed_pairs(shift: ShiftType, max_level: u32) -> Vec<SentencePair> {
    let lex = Lexicon::bundled();
    expand(&lex, &GenerationPlan::new(shift, max_level))
        .expect("bundled plan")
        .map(|p| annotate(&p, &[&WhitespaceTokenizer]).expect("weighable"))
        .collect()
}

/// A bigram trained on the heavier-last rendition of each pair.
pub fn heavy_last_lm(pairs: &[SentencePair]) -> NGramLM {
    let corpus: Vec<&str> = pairs
        .iter()
        .map(|p| {
            let words = |i: usize| p.constituents[i].text.split_whitespace().count();
            if words(0) > words(1) { p.shifted.as_str() } else { p.unshifted.as_str() }
        })
        .collect();
    train_ngram(&corpus, 2, 0.1).expect("non-empty corpus")
}

/// Analysis records for `pairs` scored by `lm`.
pub fn records(pairs: &[SentencePair], lm: &NGramLM) -> Vec<AnalysisRecord> {
    let prefs: Vec<_> = pairs.iter().map(|p| preference(lm, p).expect("scorable")).collect();
    join_records(&prefs, pairs, None).expect("joinable")
}
