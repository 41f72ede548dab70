use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::pair::SentencePair;
use crate::scoring::PreferenceRecord;
use crate::weights::Metric;

use super::bspline::{constraint_null_space, second_difference_penalty, BSplineBasis};
use super::AnalysisError;

/// Verb group that absorbs verbs seen only once.
pub const POOLED_VERB: &str = "other";

/// One modelling row: a pair's preference with its predictor values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub pair_id: String,
    pub verb: String,
    pub m_preference: f64,
    pub predictors: BTreeMap<Metric, f64>,
}

/// Joins preferences with weighed pairs by pair id. The token ratio is read
/// for `tokenizer` when given, else from the pair's only token ratio.
pub fn join_records(
    prefs: &[PreferenceRecord],
    pairs: &[SentencePair],
    tokenizer: Option<&str>,
) -> Result<Vec<AnalysisRecord>, AnalysisError> {
    let by_id: HashMap<&str, &SentencePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    prefs
        .iter()
        .map(|r| {
            let pair = by_id
                .get(r.pair_id.as_str())
                .ok_or_else(|| AnalysisError::UnknownPair(r.pair_id.clone()))?;
            let ratios = pair
                .ratios
                .as_ref()
                .ok_or_else(|| AnalysisError::Unweighed(r.pair_id.clone()))?;
            let predictors = Metric::ALL
                .into_iter()
                .filter_map(|m| ratios.get(m, tokenizer).map(|v| (m, v)))
                .collect();
            Ok(AnalysisRecord {
                pair_id: r.pair_id.clone(),
                verb: pair.verb.clone(),
                m_preference: r.m_preference,
                predictors,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOptions {
    pub predictors: Vec<Metric>,
    pub basis_size: usize,
    /// Predictor for the verb-wise random slope; `None` fits intercepts only.
    pub random_slope: Option<Metric>,
    pub random_effects: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            predictors: vec![Metric::Token, Metric::Word, Metric::Syllable, Metric::Modifier],
            basis_size: 10,
            random_slope: Some(Metric::Word),
            random_effects: true,
        }
    }
}

impl DesignOptions {
    pub fn with_predictors(predictors: &[Metric]) -> Self {
        DesignOptions { predictors: predictors.to_vec(), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    Intercept,
    Smooth { metric: Metric, basis: BSplineBasis, constraint: DMatrix<f64> },
    RandomIntercept,
    RandomSlope { metric: Metric, center: f64 },
}

/// A group of design columns sharing one penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
    pub cols: Range<usize>,
    /// Block-local penalty, already scaled; `None` for unpenalized blocks.
    pub penalty: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub blocks: Vec<Block>,
    /// Verb group label per random-effect column index.
    pub groups: Vec<String>,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn penalized_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.penalty.is_some())
    }

    pub fn smooth_count(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b.kind, BlockKind::Smooth { .. })).count()
    }

    pub fn has_random_effects(&self) -> bool {
        self.blocks
            .iter()
            .any(|b| matches!(b.kind, BlockKind::RandomIntercept | BlockKind::RandomSlope { .. }))
    }
}

fn column(records: &[AnalysisRecord], m: Metric) -> Result<Vec<f64>, AnalysisError> {
    records
        .iter()
        .map(|r| {
            r.predictors
                .get(&m)
                .copied()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AnalysisError::MissingPredictor { metric: m, pair_id: r.pair_id.clone() })
        })
        .collect()
}

/// Scales `s` so its Frobenius norm matches that of `xtx`, making smoothing
/// parameters comparable across blocks and invariant to row duplication.
fn scaled(s: DMatrix<f64>, xtx_norm: f64) -> DMatrix<f64> {
    let sn = s.norm();
    if sn > 0.0 && xtx_norm > 0.0 {
        s * (xtx_norm / sn)
    } else {
        s
    }
}

/// Verb groups with singletons pooled; returns (label per row, sorted labels).
fn verb_groups(records: &[AnalysisRecord]) -> (Vec<String>, Vec<String>) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.verb.as_str()).or_default() += 1;
    }
    let labels: Vec<String> = records
        .iter()
        .map(|r| if counts[r.verb.as_str()] > 1 { r.verb.clone() } else { POOLED_VERB.to_string() })
        .collect();
    let mut groups: Vec<String> = labels.clone();
    groups.sort();
    groups.dedup();
    (labels, groups)
}

pub fn build_design(records: &[AnalysisRecord], opts: &DesignOptions) -> Result<DesignMatrix, AnalysisError> {
    let n = records.len();
    if n == 0 {
        return Err(AnalysisError::Empty);
    }
    if opts.predictors.is_empty() {
        return Err(AnalysisError::NoPredictors);
    }
    if opts.basis_size < 4 {
        return Err(AnalysisError::BasisTooSmall(opts.basis_size));
    }
    let y = DVector::from_iterator(n, records.iter().map(|r| r.m_preference));
    if y.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteResponse);
    }

    let mut pieces: Vec<(String, BlockKind, DMatrix<f64>, Option<DMatrix<f64>>)> = Vec::new();
    pieces.push(("intercept".into(), BlockKind::Intercept, DMatrix::from_element(n, 1, 1.0), None));

    for &m in &opts.predictors {
        let xs = column(records, m)?;
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(hi > lo) {
            return Err(AnalysisError::ConstantPredictor(m));
        }
        let basis = BSplineBasis::new(lo, hi, opts.basis_size);
        let b = basis.matrix(&xs);
        let colsum = DVector::from_iterator(b.ncols(), b.column_iter().map(|c| c.sum()));
        let z = constraint_null_space(&colsum);
        let xb = &b * &z;
        let s = z.transpose() * second_difference_penalty(opts.basis_size) * &z;
        let s = scaled(s, (xb.transpose() * &xb).norm());
        pieces.push((format!("s({m})"), BlockKind::Smooth { metric: m, basis, constraint: z }, xb, Some(s)));
    }

    let (labels, groups) = verb_groups(records);
    let use_re = opts.random_effects && groups.len() > 1;
    if use_re {
        let g = groups.len();
        let index: HashMap<&str, usize> = groups.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut zi = DMatrix::zeros(n, g);
        for (r, l) in labels.iter().enumerate() {
            zi[(r, index[l.as_str()])] = 1.0;
        }
        let pen = scaled(DMatrix::identity(g, g), (zi.transpose() * &zi).norm());
        if let Some(sm) = opts.random_slope {
            let xs = column(records, sm)?;
            let center = xs.iter().sum::<f64>() / n as f64;
            let mut zs = DMatrix::zeros(n, g);
            for (r, l) in labels.iter().enumerate() {
                zs[(r, index[l.as_str()])] = xs[r] - center;
            }
            pieces.push(("re(verb)".into(), BlockKind::RandomIntercept, zi, Some(pen)));
            let norm = (zs.transpose() * &zs).norm();
            if norm > 0.0 {
                let pen = scaled(DMatrix::identity(g, g), norm);
                pieces.push((format!("re(verb, {sm})"), BlockKind::RandomSlope { metric: sm, center }, zs, Some(pen)));
            }
        } else {
            pieces.push(("re(verb)".into(), BlockKind::RandomIntercept, zi, Some(pen)));
        }
    }

    let p: usize = pieces.iter().map(|(_, _, m, _)| m.ncols()).sum();
    let mut x = DMatrix::zeros(n, p);
    let mut blocks = Vec::with_capacity(pieces.len());
    let mut at = 0;
    for (name, kind, m, penalty) in pieces {
        let w = m.ncols();
        x.columns_mut(at, w).copy_from(&m);
        blocks.push(Block { name, kind, cols: at..at + w, penalty });
        at += w;
    }
    Ok(DesignMatrix { y, x, blocks, groups: if use_re { groups } else { Vec::new() } })
}
