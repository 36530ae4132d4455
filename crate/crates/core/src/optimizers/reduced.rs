//! QR-compressed least-squares problem.
//!
//! With Θ = QR and z = Qᵀy, any column subset S satisfies
//! ‖Θ_S c − y‖² = ‖R_S c − z‖² + ‖y − Q z‖², so every subset solve runs on
//! the small `r × |S|` matrix R_S instead of the N-row data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::RegressionProblem;

#[derive(Debug, Clone)]
pub struct ReducedProblem {
    r: DMatrix<f64>,
    z: DMatrix<f64>,
    offset: Vec<f64>,
    target_norm2: Vec<f64>,
    gram: DMatrix<f64>,
    // Θᵀy, one column per target
    cross: DMatrix<f64>,
    column_norms: Vec<f64>,
    n_rows: usize,
}

/// Least-squares solution on a column subset.
#[derive(Debug, Clone)]
pub struct SubsetSolve {
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub rank_deficient: bool,
}

impl ReducedProblem {
    pub fn new(problem: &RegressionProblem) -> Result<Self> {
        let mut theta = problem.features().clone();
        let mut y = problem.targets().clone();
        if let Some(w) = problem.row_weights() {
            for (i, wi) in w.iter().enumerate() {
                let s = wi.sqrt();
                theta.row_mut(i).scale_mut(s);
                y.row_mut(i).scale_mut(s);
            }
        }
        Self::from_matrices(theta, y)
    }

    pub fn from_matrices(theta: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let (n, p) = theta.shape();
        if n == 0 || p == 0 || y.nrows() != n {
            return Err(Error::argument("empty or mismatched least-squares problem"));
        }
        let column_norms = theta.column_iter().map(|c| c.norm()).collect();
        let target_norm2 = y.column_iter().map(|c| c.norm_squared()).collect();
        let qr = theta.qr();
        let q = qr.q();
        let r = qr.r();
        let z = q.tr_mul(&y);
        let resid = &y - &q * &z;
        let offset = resid.column_iter().map(|c| c.norm_squared()).collect();
        let gram = r.tr_mul(&r);
        let cross = r.tr_mul(&z);
        Ok(ReducedProblem {
            r,
            z,
            offset,
            target_norm2,
            gram,
            cross,
            column_norms,
            n_rows: n,
        })
    }

    pub fn n_features(&self) -> usize {
        self.r.ncols()
    }

    pub fn n_targets(&self) -> usize {
        self.z.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub(crate) fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub(crate) fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub(crate) fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub(crate) fn cross(&self) -> &DMatrix<f64> {
        &self.cross
    }

    pub(crate) fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    /// Part of ‖y_j‖² outside the column space of Θ.
    pub(crate) fn offset(&self, j: usize) -> f64 {
        self.offset[j]
    }

    /// ‖y_j‖², the residual of the empty model.
    pub fn null_rss(&self, j: usize) -> f64 {
        self.target_norm2[j]
    }

    /// ‖Θ ξ − y_j‖² for a full-length coefficient vector.
    pub fn rss(&self, j: usize, xi: &[f64]) -> f64 {
        let mut s = self.offset[j];
        for i in 0..self.r.nrows() {
            let mut v = -self.z[(i, j)];
            for (k, &c) in xi.iter().enumerate().skip(i) {
                if c != 0.0 {
                    v += self.r[(i, k)] * c;
                }
            }
            s += v * v;
        }
        s
    }

    /// Residual of the fit restricted to `support`: z_j − R_S c.
    pub(crate) fn reduced_residual(&self, j: usize, support: &[usize], coef: &[f64]) -> DVector<f64> {
        let mut res = self.z.column(j).into_owned();
        for (&k, &c) in support.iter().zip(coef) {
            res.axpy(-c, &self.r.column(k), 1.0);
        }
        res
    }

    /// Ridge least squares on `support` for target `j`.
    pub fn solve_subset(&self, j: usize, support: &[usize], ridge: f64) -> SubsetSolve {
        let s = support.len();
        if s == 0 {
            return SubsetSolve {
                coefficients: Vec::new(),
                rss: self.offset[j] + self.z.column(j).norm_squared(),
                rank_deficient: false,
            };
        }
        let rows = self.r.nrows();
        // columns of R_S have zeros below their original index
        let last = support.iter().map(|&k| k + 1).max().unwrap_or(0).min(rows);
        let extra = if ridge > 0.0 { s } else { 0 };
        let mut a = DMatrix::zeros(last + extra, s);
        let mut b = DVector::zeros(last + extra);
        for (c, &k) in support.iter().enumerate() {
            for i in 0..last.min(k + 1) {
                a[(i, c)] = self.r[(i, k)];
            }
        }
        for i in 0..last {
            b[i] = self.z[(i, j)];
        }
        let sr = ridge.sqrt();
        for c in 0..extra {
            a[(last + c, c)] = sr;
        }
        let (coef, rank_deficient) = least_squares(a, b);
        let coefficients: Vec<f64> = coef.iter().copied().collect();
        let rss = self.reduced_residual(j, support, &coefficients).norm_squared() + self.offset[j];
        SubsetSolve {
            coefficients,
            rss,
            rank_deficient,
        }
    }
}

/// min ‖a x − b‖ by Householder QR, falling back to an SVD pseudoinverse
/// when `a` is numerically rank deficient.
pub(crate) fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> (DVector<f64>, bool) {
    let (m, n) = a.shape();
    if m >= n {
        let qr = a.clone().qr();
        let r = qr.r();
        let dmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let tol = dmax * f64::EPSILON * m.max(n) as f64;
        if dmax > 0.0 && (0..n).all(|i| r[(i, i)].abs() > tol) {
            let qtb = qr.q().tr_mul(&b);
            if let Some(x) = r.solve_upper_triangular(&qtb) {
                if x.iter().all(|v| v.is_finite()) {
                    return (x, false);
                }
            }
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * f64::EPSILON * m.max(n) as f64;
    let x = svd
        .solve(&b, eps)
        .unwrap_or_else(|_| DVector::zeros(n));
    (x, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_problem(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = crate::seed::rng(seed);
        let theta = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        (theta, y)
    }

    #[test]
    fn subset_solution_matches_direct_least_squares() {
        let (theta, y) = random_problem(30, 7, 1);
        let red = ReducedProblem::from_matrices(theta.clone(), y.clone()).unwrap();
        for support in [vec![0, 3, 6], vec![5], vec![1, 2, 3, 4, 5, 6, 0]] {
            for j in 0..2 {
                let sub = theta.select_columns(&support);
                let direct = sub.clone().svd(true, true).solve(&y.column(j), 1e-14).unwrap();
                let got = red.solve_subset(j, &support, 0.0);
                assert!(!got.rank_deficient);
                for (a, b) in got.coefficients.iter().zip(direct.iter()) {
                    assert!((a - b).abs() < 1e-10);
                }
                let rss = (&sub * &direct - y.column(j)).norm_squared();
                assert!((got.rss - rss).abs() < 1e-10);
                let mut full = vec![0.0; 7];
                for (&k, &c) in support.iter().zip(&got.coefficients) {
                    full[k] = c;
                }
                assert!((red.rss(j, &full) - rss).abs() < 1e-10);
            }
        }
        assert!((red.solve_subset(0, &[], 0.0).rss - red.null_rss(0)).abs() < 1e-10);
    }

    #[test]
    fn ridge_matches_normal_equations() {
        let (theta, y) = random_problem(25, 5, 2);
        let red = ReducedProblem::from_matrices(theta.clone(), y.clone()).unwrap();
        let lam = 0.3;
        let lhs = theta.tr_mul(&theta) + DMatrix::identity(5, 5) * lam;
        let rhs = theta.tr_mul(&y.column(1).into_owned());
        let x = lhs.lu().solve(&rhs).unwrap();
        let got = red.solve_subset(1, &[0, 1, 2, 3, 4], lam);
        for (a, b) in got.coefficients.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicate_columns_are_flagged() {
        let (mut theta, y) = random_problem(20, 4, 3);
        let c0 = theta.column(0).into_owned();
        theta.set_column(2, &c0);
        let red = ReducedProblem::from_matrices(theta, y).unwrap();
        let got = red.solve_subset(0, &[0, 1, 2], 0.0);
        assert!(got.rank_deficient);
        assert!(got.coefficients.iter().all(|v| v.is_finite()));
        // minimum-norm split of the duplicated column
        assert!((got.coefficients[0] - got.coefficients[2]).abs() < 1e-8);
    }
}
