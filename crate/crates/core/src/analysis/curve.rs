use std::fmt::Write as _;

use serde::Serialize;

use crate::weights::Metric;

use super::design::AnalysisRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub center: f64,
    pub mean: f64,
    pub count: usize,
    /// Standard error of the mean (sample sd / sqrt(n)); 0 for a single point.
    pub stderr: f64,
}

/// Mean preference per equal-width bin of `(x, preference)` points. Bins
/// without data are left out.
pub fn preference_curve(points: &[(f64, f64)], bins: usize) -> Vec<CurvePoint> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if pts.is_empty() || bins == 0 {
        return Vec::new();
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| (a.min(x), b.max(x)));
    let bins = if hi > lo { bins } else { 1 };
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 0.0 };
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for &(x, y) in &pts {
        let i = if width > 0.0 { (((x - lo) / width) as usize).min(bins - 1) } else { 0 };
        members[i].push(y);
    }
    members
        .into_iter()
        .enumerate()
        .filter(|(_, ys)| !ys.is_empty())
        .map(|(i, ys)| {
            let n = ys.len();
            let mean = ys.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            let (bin_lo, bin_hi) = if width > 0.0 { (lo + width * i as f64, lo + width * (i + 1) as f64) } else { (lo, hi) };
            CurvePoint { bin_lo, bin_hi, center: (bin_lo + bin_hi) / 2.0, mean, count: n, stderr }
        })
        .collect()
}

/// Curve of preference against one ratio metric; records lacking the metric
/// are skipped.
pub fn metric_curve(records: &[AnalysisRecord], metric: Metric, bins: usize) -> Vec<CurvePoint> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.predictors.get(&metric).map(|&x| (x, r.m_preference)))
        .collect();
    preference_curve(&pts, bins)
}

/// Tab-separated curve table with a leading metric column.
pub fn curves_tsv(curves: &[(Metric, Vec<CurvePoint>)]) -> String {
    let mut out = String::from("metric\tbin_lo\tbin_hi\tcenter\tmean\tcount\tstderr\n");
    for (m, pts) in curves {
        for p in pts {
            let _ = writeln!(
                out,
                "{m}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{:.6}",
                p.bin_lo, p.bin_hi, p.center, p.mean, p.count, p.stderr
            );
        }
    }
    out
}
