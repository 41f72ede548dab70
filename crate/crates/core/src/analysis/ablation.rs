use std::fmt::Write as _;

use serde::Serialize;

use crate::weights::Metric;

use super::design::{build_design, AnalysisRecord, DesignOptions};
use super::gam::{fit_gam, FitOptions};
use super::AnalysisError;

/// Outcome of one model fit in an ablation row.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Cell {
    Fit { r_squared: f64, adj_r_squared: f64, edf: f64 },
    Failed { message: String },
}

impl Cell {
    fn from_fit(records: &[AnalysisRecord], design: &DesignOptions, fit: &FitOptions) -> Self {
        match build_design(records, design).and_then(|d| fit_gam(&d, fit)) {
            Ok(f) => Cell::Fit { r_squared: f.r_squared, adj_r_squared: f.adj_r_squared, edf: f.edf },
            Err(e) => Cell::Failed { message: e.to_string() },
        }
    }

    /// Adjusted R² when the fit succeeded.
    pub fn adj(&self) -> Option<f64> {
        match self {
            Cell::Fit { adj_r_squared, .. } => Some(*adj_r_squared),
            Cell::Failed { .. } => None,
        }
    }

    pub fn r2(&self) -> Option<f64> {
        match self {
            Cell::Fit { r_squared, .. } => Some(*r_squared),
            Cell::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub label: String,
    pub full: Cell,
    /// One refit per dropped predictor, in predictor order.
    pub dropped: Vec<(Metric, Cell)>,
}

impl AblationRow {
    pub fn dropped(&self, m: Metric) -> Option<&Cell> {
        self.dropped.iter().find(|(d, _)| *d == m).map(|(_, c)| c)
    }

    /// Full adjusted R² minus the adjusted R² without `m`.
    pub fn delta(&self, m: Metric) -> Option<f64> {
        Some(self.full.adj()? - self.dropped(m)?.adj()?)
    }
}

/// Fits the full model, then refits once per dropped predictor with smoothing
/// parameters re-selected. Dropping the random-slope predictor also drops the
/// random slope. A failing fit is recorded in its cell only.
pub fn ablate(
    label: impl Into<String>,
    records: &[AnalysisRecord],
    design: &DesignOptions,
    fit: &FitOptions,
) -> Result<AblationRow, AnalysisError> {
    if design.predictors.len() < 2 {
        return Err(AnalysisError::TooFewPredictors(design.predictors.len()));
    }
    let reduced: Vec<(Metric, DesignOptions)> = design
        .predictors
        .iter()
        .map(|&m| {
            let mut d = design.clone();
            d.predictors.retain(|&p| p != m);
            if d.random_slope == Some(m) {
                d.random_slope = None;
            }
            (m, d)
        })
        .collect();
    // the fits are independent; run them side by side
    let (full, dropped) = std::thread::scope(|s| {
        let handles: Vec<_> = reduced
            .iter()
            .map(|(m, d)| (*m, s.spawn(move || Cell::from_fit(records, d, fit))))
            .collect();
        let full = Cell::from_fit(records, design, fit);
        let dropped: Vec<(Metric, Cell)> =
            handles.into_iter().map(|(m, h)| (m, h.join().expect("ablation fit thread"))).collect();
        (full, dropped)
    });
    Ok(AblationRow { label: label.into(), full, dropped })
}

/// Rows sharing one predictor set, rendered as a tab-separated table of
/// adjusted R² values (`NA` for failed fits).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationTable {
    pub predictors: Vec<Metric>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("model\tfull");
        for m in &self.predictors {
            let _ = write!(out, "\tno_{m}");
        }
        out.push('\n');
        let fmt = |c: Option<&Cell>| c.and_then(Cell::adj).map_or("NA".to_string(), |v| format!("{v:.6}"));
        for r in &self.rows {
            out.push_str(&r.label);
            let _ = write!(out, "\t{}", fmt(Some(&r.full)));
            for &m in &self.predictors {
                let _ = write!(out, "\t{}", fmt(r.dropped(m)));
            }
            out.push('\n');
        }
        out
    }
}
