//! Additive regression of preferences on weight ratios, ablation, curves
//! and rank correlation.
//!
//! The regression is penalized least squares over a design of
//!
//! * an unpenalized intercept,
//! * one sum-to-zero constrained cubic B-spline smooth per predictor with a
//!   second-difference penalty,
//! * verb-wise random intercepts and slopes as ridge-penalized blocks,
//!
//! with one smoothing parameter per block chosen by generalized
//! cross-validation on a log grid. Every penalty is rescaled to the
//! Frobenius norm of its block's cross-product so the parameters share a
//! scale.

mod ablation;
mod bspline;
mod curve;
mod design;
mod gam;
mod spearman;

use std::collections::HashMap;

pub use ablation::{ablate, AblationRow, AblationTable, Cell};
pub use bspline::{constraint_null_space, second_difference_penalty, BSplineBasis};
pub use curve::{curves_tsv, metric_curve, preference_curve, CurvePoint};
pub use design::{
    build_design, join_records, AnalysisRecord, Block, BlockKind, DesignMatrix, DesignOptions, POOLED_VERB,
};
pub use gam::{fit_gam, log_grid, BlockFit, FitOptions, GamFit, LambdaSelection, PenalizedObjective};
pub use spearman::{average_ranks, pearson, spearman, Correlation};

use crate::scoring::PreferenceRecord;
use crate::study::AggregateJudgment;
use crate::weights::Metric;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("no records to analyse")]
    Empty,
    #[error("no predictors requested")]
    NoPredictors,
    #[error("ablation needs at least two predictors (got {0})")]
    TooFewPredictors(usize),
    #[error("pair {pair_id} has no {metric} ratio")]
    MissingPredictor { metric: Metric, pair_id: String },
    #[error("predictor {0} is constant across the data")]
    ConstantPredictor(Metric),
    #[error("basis size must be at least 4 (got {0})")]
    BasisTooSmall(usize),
    #[error("response contains non-finite values")]
    NonFiniteResponse,
    #[error("penalized normal equations are singular (condition number {condition:.3e})")]
    Singular { condition: f64 },
    #[error("expected {expected} smoothing parameters, got {found}")]
    LambdaCount { expected: usize, found: usize },
    #[error("invalid smoothing parameter {0}")]
    InvalidLambda(f64),
    #[error("smoothing-parameter grid is empty")]
    EmptyGrid,
    #[error("vectors differ in length ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 3 points for a rank correlation (got {0})")]
    TooFewPoints(usize),
    #[error("{0} has zero variance; correlation undefined")]
    ZeroVariance(&'static str),
    #[error("preference for unknown pair {0}")]
    UnknownPair(String),
    #[error("pair {0} carries no weight ratios")]
    Unweighed(String),
}

/// Spearman correlation between included human means and model preferences,
/// over pairs present in both.
pub fn correlate_human(prefs: &[PreferenceRecord], human: &[AggregateJudgment]) -> Result<Correlation, AnalysisError> {
    let model: HashMap<&str, f64> = prefs.iter().map(|p| (p.pair_id.as_str(), p.m_preference)).collect();
    let (mut h, mut m) = (Vec::new(), Vec::new());
    for a in human.iter().filter(|a| !a.excluded) {
        if let Some(&v) = model.get(a.pair_id.as_str()) {
            h.push(a.mean);
            m.push(v);
        }
    }
    spearman(&h, &m)
}
