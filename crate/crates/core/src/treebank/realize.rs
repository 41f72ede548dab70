use crate::pair::{Constituent, PairSource, SentencePair, ShiftType};

use super::matcher::ShiftMatch;
use super::tree::ParseNode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RealizeError {
    #[error("dative recipient {0:?} already begins with \"to\"")]
    RecipientHasTo(String),
    #[error("constituents are not adjacent after removing empty categories")]
    NotAdjacent,
    #[error("realized texts are identical")]
    Identical,
}

const NO_SPACE_BEFORE: &[&str] = &[".", ",", ";", "?", "!"];

fn unescape(tok: &str) -> &str {
    match tok {
        "-LRB-" | "-LCB-" | "-LSB-" => "(",
        "-RRB-" | "-RCB-" | "-RSB-" => ")",
        "``" | "''" => "\"",
        other => other,
    }
}

/// Joins treebank tokens with single spaces, attaching `.,;?!`, `n't` and
/// apostrophe clitics (`'s`, `'re`) to the preceding word.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for tok in tokens {
        let tok = unescape(tok.as_ref());
        let attach = NO_SPACE_BEFORE.contains(&tok)
            || tok.eq_ignore_ascii_case("n't")
            || (tok.starts_with('\'') && tok.len() > 1);
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

fn words(node: &ParseNode) -> Vec<&str> {
    node.yield_tokens()
}

/// Builds the unshifted/shifted pair for a match by reordering the two
/// constituents inside the full sentence, leaving everything else in place.
///
/// The pair id is `"{SHIFT}:{a.start}-{b.end}"`; callers that know the
/// tree's position in a corpus prefix it.
pub fn realize_pair(m: &ShiftMatch<'_>) -> Result<SentencePair, RealizeError> {
    let tokens = m.root.yield_tokens();
    let (a, b) = (m.constituent_a, m.constituent_b);
    if a.span.end != b.span.start {
        return Err(RealizeError::NotAdjacent);
    }
    let prefix = &tokens[..a.span.start];
    let suffix = &tokens[b.span.end..];
    let (wa, wb) = (words(a), words(b));

    let sentence = |parts: &[&[&str]]| -> String {
        let mut all: Vec<&str> = prefix.to_vec();
        for p in parts {
            all.extend_from_slice(p);
        }
        all.extend_from_slice(suffix);
        detokenize(&all)
    };

    let a_first_is = |cat: &str| a.category() == cat;
    // (first, second) in unshifted order, plus both surface strings.
    let (first, second, unshifted, shifted) = match m.shift_type {
        ShiftType::HeavyNpShift => {
            if a_first_is("NP") {
                (&wa, &wb, sentence(&[&wa, &wb]), sentence(&[&wb, &wa]))
            } else {
                (&wb, &wa, sentence(&[&wb, &wa]), sentence(&[&wa, &wb]))
            }
        }
        ShiftType::ParticleMovement => {
            if a_first_is("PRT") {
                (&wa, &wb, sentence(&[&wa, &wb]), sentence(&[&wb, &wa]))
            } else {
                (&wb, &wa, sentence(&[&wb, &wa]), sentence(&[&wa, &wb]))
            }
        }
        ShiftType::DativeAlternation => {
            if wa.first().is_some_and(|w| w.eq_ignore_ascii_case("to")) {
                return Err(RealizeError::RecipientHasTo(detokenize(&wa)));
            }
            (&wa, &wb, sentence(&[&wa, &wb]), sentence(&[&wb, &["to"], &wa]))
        }
        ShiftType::MultiplePp => (&wa, &wb, sentence(&[&wa, &wb]), sentence(&[&wb, &wa])),
    };
    if unshifted == shifted {
        return Err(RealizeError::Identical);
    }
    let [ra, rb] = m.shift_type.roles();
    Ok(SentencePair {
        id: format!("{}:{}-{}", m.shift_type.code(), a.span.start, b.span.end),
        shift_type: m.shift_type,
        unshifted,
        shifted,
        verb: m.verb_lemma.clone(),
        source: PairSource::Mined,
        constituents: vec![
            Constituent { role: ra.to_string(), text: detokenize(first), order_index: 0 },
            Constituent { role: rb.to_string(), text: detokenize(second), order_index: 1 },
        ],
        synthetic: None,
        weights_a: None,
        weights_b: None,
        ratios: None,
    })
}
