use nalgebra::{DMatrix, DVector};

/// Cubic B-spline basis with `k` functions on uniformly spaced knots.
///
/// The covered interval is the data range widened by 0.1% on each side so
/// that both end points fall strictly inside it; evaluation clamps `x` into
/// that interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    knots: Vec<f64>,
    lo: f64,
    hi: f64,
    k: usize,
}

const DEGREE: usize = 3;

impl BSplineBasis {
    /// `k >= 4` functions over `[min, max]` with `min < max`.
    pub fn new(min: f64, max: f64, k: usize) -> Self {
        assert!(k > DEGREE, "a cubic basis needs at least 4 functions");
        assert!(min < max, "empty range");
        let pad = (max - min) * 1e-3;
        let (lo, hi) = (min - pad, max + pad);
        let dx = (hi - lo) / (k - DEGREE) as f64;
        let knots = (0..k + DEGREE + 1)
            .map(|j| lo + (j as f64 - DEGREE as f64) * dx)
            .collect();
        BSplineBasis { knots, lo, hi, k }
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// All `k` basis values at `x` (Cox-de Boor recursion).
    pub fn eval(&self, x: f64) -> DVector<f64> {
        let x = x.clamp(self.lo, self.hi - (self.hi - self.lo) * 1e-12);
        let t = &self.knots;
        let m = t.len() - 1;
        let mut b: Vec<f64> = (0..m).map(|i| if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 }).collect();
        for d in 1..=DEGREE {
            for i in 0..m - d {
                let left = if t[i + d] > t[i] { (x - t[i]) / (t[i + d] - t[i]) * b[i] } else { 0.0 };
                let right = if t[i + d + 1] > t[i + 1] {
                    (t[i + d + 1] - x) / (t[i + d + 1] - t[i + 1]) * b[i + 1]
                } else {
                    0.0
                };
                b[i] = left + right;
            }
        }
        DVector::from_iterator(self.k, b.into_iter().take(self.k))
    }

    /// `n x k` basis matrix for the given points.
    pub fn matrix(&self, xs: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(xs.len(), self.k);
        for (r, &x) in xs.iter().enumerate() {
            out.row_mut(r).copy_from(&self.eval(x).transpose());
        }
        out
    }
}

/// `D'D` for the second-order difference matrix `D` on `k` coefficients.
pub fn second_difference_penalty(k: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(k.saturating_sub(2), k);
    for r in 0..k.saturating_sub(2) {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    d.transpose() * d
}

/// Orthonormal basis (`k x (k-1)`) of the null space of the row vector `c`,
/// taken from a Householder reflection that maps `c` onto the first axis.
pub fn constraint_null_space(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    let norm = c.norm();
    let mut u = c.clone();
    let sign = if c[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign * norm;
    let uu = u.dot(&u);
    let h = if uu > 0.0 {
        DMatrix::identity(k, k) - (&u * u.transpose()) * (2.0 / uu)
    } else {
        DMatrix::identity(k, k)
    };
    h.columns(1, k - 1).into_owned()
}
