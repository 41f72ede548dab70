//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use shiftbench_core::analysis::AnalysisRecord;
use shiftbench_core::treebank::{match_shift_pattern, parse_treebank, ParseNode};
use shiftbench_core::weights::Metric;
use shiftbench_core::ShiftType;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn test_data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

pub fn mini_treebank_source() -> String {
    std::fs::read_to_string(data_path("mini_treebank.mrg")).unwrap()
}

pub fn mini_treebank() -> Vec<ParseNode> {
    parse_treebank(&mini_treebank_source()).unwrap()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub struct GoldMatch {
    pub tree: usize,
    pub shift_type: ShiftType,
    pub a: String,
    pub b: String,
}

pub fn gold_matches() -> BTreeSet<GoldMatch> {
    let text = std::fs::read_to_string(data_path("mini_treebank_gold.json")).unwrap();
    serde_json::from_str::<Vec<GoldMatch>>(&text).unwrap().into_iter().collect()
}

/// Matches found by the matcher, in the same shape as the gold labels.
pub fn predicted_matches(trees: &[ParseNode], shift: ShiftType) -> BTreeSet<GoldMatch> {
    let mut out = BTreeSet::new();
    for (tree, t) in trees.iter().enumerate() {
        for m in match_shift_pattern(t, shift) {
            out.insert(GoldMatch {
                tree,
                shift_type: shift,
                a: m.constituent_a.yield_tokens().join(" "),
                b: m.constituent_b.yield_tokens().join(" "),
            });
        }
    }
    out
}

/// (precision, recall) of `predicted` against `gold`, both restricted to one
/// shift type by the caller. Empty sets count as perfect.
pub fn precision_recall(predicted: &BTreeSet<GoldMatch>, gold: &BTreeSet<GoldMatch>) -> (f64, f64) {
    let hit = predicted.intersection(gold).count() as f64;
    let p = if predicted.is_empty() { 1.0 } else { hit / predicted.len() as f64 };
    let r = if gold.is_empty() { 1.0 } else { hit / gold.len() as f64 };
    (p, r)
}

/// The four treebank sentences reproducing the alternation examples, with
/// their expected (unshifted, shifted) realizations.
pub const REFERENCE_EXAMPLES: [(usize, ShiftType, &str, &str); 4] = [
    (
        0,
        ShiftType::HeavyNpShift,
        "I met the tall man selling water to marathon runners at the park.",
        "I met at the park the tall man selling water to marathon runners.",
    ),
    (
        3,
        ShiftType::ParticleMovement,
        "She looked up her question on her computer.",
        "She looked her question up on her computer.",
    ),
    (
        6,
        ShiftType::DativeAlternation,
        "He sent her a gift for her birthday.",
        "He sent a gift to her for her birthday.",
    ),
    (
        9,
        ShiftType::MultiplePp,
        "I went to the mall with my sister on Sunday.",
        "I went with my sister to the mall on Sunday.",
    ),
];

pub fn syllable_oracle() -> Vec<(String, u32)> {
    std::fs::read_to_string(test_data_path("syllable_oracle.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (w, n) = l.split_once('\t').unwrap();
            (w.to_string(), n.trim().parse().unwrap())
        })
        .collect()
}

/// Independent additive-smoothing n-gram: counts are kept as plain string
/// tuples and every conditional probability is recomputed from scratch.
pub struct BruteNgram {
    order: usize,
    delta: f64,
    sentences: Vec<Vec<String>>,
    vocab: BTreeSet<String>,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

impl BruteNgram {
    pub fn new(corpus: &[&str], order: usize, delta: f64) -> Self {
        let sentences: Vec<Vec<String>> = corpus.iter().map(|s| words(s)).collect();
        let vocab = sentences.iter().flatten().cloned().collect();
        BruteNgram { order, delta, sentences, vocab }
    }

    fn padded(&self, s: &[String]) -> Vec<String> {
        let mut v = vec!["<s>".to_string(); self.order - 1];
        v.extend(s.iter().map(|w| if self.vocab.contains(w) { w.clone() } else { "<unk>".to_string() }));
        v
    }

    fn count(&self, gram: &[String]) -> usize {
        let mut n = 0;
        for s in &self.sentences {
            let p = self.padded(s);
            for i in (self.order - 1)..p.len() {
                let start = i + 1 - gram.len();
                if p[start..=i] == *gram {
                    n += 1;
                }
            }
        }
        n
    }

    fn context_count(&self, ctx: &[String]) -> usize {
        if ctx.is_empty() {
            return self.sentences.iter().map(Vec::len).sum();
        }
        // occurrences of ctx immediately followed by some scored position
        let mut n = 0;
        for s in &self.sentences {
            let p = self.padded(s);
            for i in (self.order - 1)..p.len() {
                if p[i - ctx.len()..i] == *ctx {
                    n += 1;
                }
            }
        }
        n
    }

    /// Chain-rule log probability of `text`.
    pub fn log_prob(&self, text: &str) -> f64 {
        let p = self.padded(&words(text));
        let v = self.vocab.len() as f64 + 1.0;
        let mut total = 0.0;
        for i in (self.order - 1)..p.len() {
            let gram = &p[i + 1 - self.order..=i];
            let c = self.count(gram) as f64;
            let t = self.context_count(&gram[..self.order - 1]) as f64;
            total += ((c + self.delta) / (t + self.delta * v)).ln();
        }
        total
    }
}

/// Average ranks by direct counting: rank = #less + (#equal + 1) / 2.
pub fn brute_average_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman via the textbook Pearson-on-ranks formula with brute ranks.
pub fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (brute_average_ranks(x), brute_average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn record(i: usize, verb: &str, y: f64, preds: &[(Metric, f64)]) -> AnalysisRecord {
    AnalysisRecord {
        pair_id: format!("r{i}"),
        verb: verb.to_string(),
        m_preference: y,
        predictors: preds.iter().copied().collect(),
    }
}

/// y = sin(2πx) + N(0, 0.05²) on an even grid over [0, 1].
pub fn sine_records(n: usize, seed: u64) -> Vec<AnalysisRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            let y = (2.0 * std::f64::consts::PI * x).sin() + 0.05 * normal(&mut rng);
            record(i, "v", y, &[(Metric::Word, x)])
        })
        .collect()
}

/// Response driven by the word predictor only; the syllable predictor is
/// independent noise. Verbs rotate over six groups without any effect.
pub fn informative_vs_noise(n: usize, seed: u64) -> Vec<AnalysisRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let a: f64 = rng.random_range(0.0..3.0);
            let noise: f64 = rng.random_range(0.0..3.0);
            let y = 2.0 * (1.5 * a).sin() + a + 0.3 * normal(&mut rng);
            let verb = ["give", "send", "show", "tell", "offer", "hand"][i % 6];
            record(i, verb, y, &[(Metric::Word, a), (Metric::Syllable, noise)])
        })
        .collect()
}

/// Groups `(x, y)` values by x and returns sorted distinct xs with mean ys.
pub fn means_by_key(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut acc: HashMap<u64, (f64, f64, usize)> = HashMap::new();
    for &(x, y) in points {
        let e = acc.entry(x.to_bits()).or_insert((x, 0.0, 0));
        e.1 += y;
        e.2 += 1;
    }
    let mut out: Vec<(f64, f64)> = acc.into_values().map(|(x, s, n)| (x, s / n as f64)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}
