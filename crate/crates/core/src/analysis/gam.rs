use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::design::{BlockKind, DesignMatrix};
use super::AnalysisError;

/// `points` values spaced evenly in log10 between `min` and `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.log10(), max.log10());
            (0..points)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSelection {
    /// Coordinate-wise generalized cross-validation over `grid`, sweeping
    /// all penalized blocks until no choice changes or `max_sweeps` is hit.
    Gcv { grid: Vec<f64>, max_sweeps: usize },
    /// One smoothing parameter per penalized block, in block order.
    Fixed(Vec<f64>),
}

impl Default for LambdaSelection {
    fn default() -> Self {
        LambdaSelection::Gcv { grid: log_grid(1e-4, 1e4, 12), max_sweeps: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub selection: LambdaSelection,
    /// Relative ridge added to every non-intercept coefficient, as a
    /// fraction of the largest diagonal entry of `X'X`.
    pub ridge_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { selection: LambdaSelection::default(), ridge_floor: 1e-10 }
    }
}

impl FitOptions {
    pub fn fixed(lambdas: Vec<f64>) -> Self {
        FitOptions { selection: LambdaSelection::Fixed(lambdas), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockFit {
    pub name: String,
    pub lambda: Option<f64>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GamFit {
    pub n: usize,
    pub coefficients: Vec<f64>,
    pub blocks: Vec<BlockFit>,
    /// Selected smoothing parameters, one per penalized block.
    pub lambdas: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub edf: f64,
    pub gcv: f64,
}

/// `||y - X b||^2 + sum_j lambda_j b_j' S_j b_j + b' F b` for a design with
/// fixed smoothing parameters, where `F` is the diagonal ridge floor.
#[derive(Debug, Clone)]
pub struct PenalizedObjective<'d> {
    design: &'d DesignMatrix,
    penalties: Vec<(Range<usize>, DMatrix<f64>)>,
    floor: DVector<f64>,
}

impl<'d> PenalizedObjective<'d> {
    pub fn new(design: &'d DesignMatrix, lambdas: &[f64], ridge_floor: f64) -> Result<Self, AnalysisError> {
        let blocks: Vec<_> = design.penalized_blocks().collect();
        if lambdas.len() != blocks.len() {
            return Err(AnalysisError::LambdaCount { expected: blocks.len(), found: lambdas.len() });
        }
        if let Some(&bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(AnalysisError::InvalidLambda(bad));
        }
        let penalties = blocks
            .iter()
            .zip(lambdas)
            .map(|(b, &l)| (b.cols.clone(), b.penalty.as_ref().unwrap() * l))
            .collect();
        Ok(PenalizedObjective { design, penalties, floor: floor_diagonal(design, ridge_floor) })
    }

    fn penalty_times(&self, beta: &DVector<f64>) -> DVector<f64> {
        let mut out = self.floor.component_mul(beta);
        for (cols, s) in &self.penalties {
            let b = beta.rows(cols.start, cols.len());
            let mut seg = out.rows_mut(cols.start, cols.len());
            seg += s * b;
        }
        out
    }

    pub fn value(&self, beta: &DVector<f64>) -> f64 {
        let r = &self.design.y - &self.design.x * beta;
        r.norm_squared() + beta.dot(&self.penalty_times(beta))
    }

    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let r = &self.design.y - &self.design.x * beta;
        (self.design.x.transpose() * r) * -2.0 + self.penalty_times(beta) * 2.0
    }
}

fn floor_diagonal(design: &DesignMatrix, ridge_floor: f64) -> DVector<f64> {
    let p = design.cols();
    let max_diag = design.x.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max);
    let mut floor = DVector::from_element(p, ridge_floor * max_diag);
    for b in &design.blocks {
        if matches!(b.kind, BlockKind::Intercept) {
            for c in b.cols.clone() {
                floor[c] = 0.0;
            }
        }
    }
    floor
}

struct Normal<'d> {
    design: &'d DesignMatrix,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    floor: DVector<f64>,
    blocks: Vec<(Range<usize>, &'d DMatrix<f64>)>,
}

struct Solved {
    beta: DVector<f64>,
    edf: f64,
    rss: f64,
}

impl<'d> Normal<'d> {
    fn new(design: &'d DesignMatrix, ridge_floor: f64) -> Self {
        let xt = design.x.transpose();
        Normal {
            design,
            xtx: &xt * &design.x,
            xty: &xt * &design.y,
            yty: design.y.norm_squared(),
            floor: floor_diagonal(design, ridge_floor),
            blocks: design
                .penalized_blocks()
                .map(|b| (b.cols.clone(), b.penalty.as_ref().unwrap()))
                .collect(),
        }
    }

    fn system(&self, lambdas: &[f64]) -> DMatrix<f64> {
        let mut a = self.xtx.clone();
        for (c, f) in self.floor.iter().enumerate() {
            a[(c, c)] += f;
        }
        for ((cols, s), &l) in self.blocks.iter().zip(lambdas) {
            let mut view = a.view_mut((cols.start, cols.start), (cols.len(), cols.len()));
            view += *s * l;
        }
        a
    }

    fn solve(&self, lambdas: &[f64]) -> Result<Solved, AnalysisError> {
        let a = self.system(lambdas);
        let chol = a.clone().cholesky().ok_or_else(|| AnalysisError::Singular {
            condition: condition_number(&a),
        })?;
        let beta = chol.solve(&self.xty);
        let m = chol.solve(&self.xtx);
        let edf = m.trace();
        let rss = (self.yty - 2.0 * beta.dot(&self.xty) + beta.dot(&(&self.xtx * &beta))).max(0.0);
        Ok(Solved { beta, edf, rss })
    }

    fn gcv(&self, s: &Solved) -> f64 {
        let n = self.design.rows() as f64;
        let dof = n - s.edf;
        if dof <= 0.0 {
            f64::INFINITY
        } else {
            n * s.rss / (dof * dof)
        }
    }
}

fn condition_number(a: &DMatrix<f64>) -> f64 {
    let eig = a.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn select_gcv(normal: &Normal<'_>, grid: &[f64], max_sweeps: usize) -> Result<Vec<f64>, AnalysisError> {
    let q = normal.blocks.len();
    if q == 0 {
        return Ok(Vec::new());
    }
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(AnalysisError::InvalidLambda(bad));
    }
    let start = (0..grid.len())
        .min_by(|&a, &b| grid[a].ln().abs().total_cmp(&grid[b].ln().abs()))
        .unwrap();
    let mut idx = vec![start; q];
    let score = |idx: &[usize]| -> Option<f64> {
        let lambdas: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        normal.solve(&lambdas).ok().map(|s| normal.gcv(&s))
    };
    let mut best = score(&idx).unwrap_or(f64::INFINITY);
    for _ in 0..max_sweeps.max(1) {
        let mut changed = false;
        for j in 0..q {
            let current = idx[j];
            let mut best_g = current;
            for g in (0..grid.len()).filter(|&g| g != current) {
                idx[j] = g;
                if let Some(v) = score(&idx) {
                    if v < best {
                        best = v;
                        best_g = g;
                    }
                }
            }
            idx[j] = best_g;
            changed |= best_g != current;
        }
        if !changed {
            break;
        }
    }
    if !best.is_finite() {
        let lambdas: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        normal.solve(&lambdas)?;
    }
    Ok(idx.iter().map(|&i| grid[i]).collect())
}

/// Penalized least-squares fit of `design`, with smoothing parameters
/// chosen by `opts.selection`.
pub fn fit_gam(design: &DesignMatrix, opts: &FitOptions) -> Result<GamFit, AnalysisError> {
    let normal = Normal::new(design, opts.ridge_floor);
    let lambdas = match &opts.selection {
        LambdaSelection::Fixed(l) => {
            PenalizedObjective::new(design, l, opts.ridge_floor)?;
            l.clone()
        }
        LambdaSelection::Gcv { grid, max_sweeps } => select_gcv(&normal, grid, *max_sweeps)?,
    };
    let solved = normal.solve(&lambdas)?;
    let gcv = normal.gcv(&solved);
    let fitted = &design.x * &solved.beta;
    let residuals = &design.y - &fitted;
    let n = design.rows();
    let mean = design.y.mean();
    let tss: f64 = design.y.iter().map(|v| (v - mean).powi(2)).sum();
    let rss = residuals.norm_squared();
    let (r_squared, adj_r_squared) = if tss > 0.0 {
        let r2 = 1.0 - rss / tss;
        let dof = n as f64 - solved.edf;
        let adj = if dof > 0.0 && n > 1 { 1.0 - (rss / dof) / (tss / (n as f64 - 1.0)) } else { r2 };
        (r2, adj)
    } else {
        (0.0, 0.0)
    };
    let mut li = lambdas.iter();
    let blocks = design
        .blocks
        .iter()
        .map(|b| BlockFit {
            name: b.name.clone(),
            lambda: b.penalty.as_ref().map(|_| *li.next().unwrap()),
            coefficients: solved.beta.rows(b.cols.start, b.cols.len()).iter().copied().collect(),
        })
        .collect();
    Ok(GamFit {
        n,
        coefficients: solved.beta.iter().copied().collect(),
        blocks,
        lambdas,
        fitted: fitted.iter().copied().collect(),
        residuals: residuals.iter().copied().collect(),
        rss,
        tss,
        r_squared,
        adj_r_squared,
        edf: solved.edf,
        gcv,
    })
}

impl GamFit {
    pub fn beta(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coefficients)
    }

    /// Value of the fitted smooth for `block_name` at `x` (centred scale).
    pub fn smooth_value(&self, design: &DesignMatrix, block_name: &str, x: f64) -> Option<f64> {
        let (i, block) = design.blocks.iter().enumerate().find(|(_, b)| b.name == block_name)?;
        match &block.kind {
            BlockKind::Smooth { basis, constraint, .. } => {
                let row = basis.eval(x).transpose() * constraint;
                Some(row.iter().zip(&self.blocks[i].coefficients).map(|(a, b)| a * b).sum())
            }
            _ => None,
        }
    }
}
