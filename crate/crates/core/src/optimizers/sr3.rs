use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{assemble, ColumnOutcome, FitResult, OptimizerConfig, ReducedProblem};
use crate::error::Result;
use crate::features::RegressionProblem;

/// Sparse relaxed regularized regression (relax-and-split with an ℓ0 prox).
/// Returns the sparse auxiliary variable refit by least squares on its
/// support.
pub fn sr3(problem: &RegressionProblem, cfg: &OptimizerConfig) -> Result<FitResult> {
    let reduced = ReducedProblem::new(problem)?;
    cfg.validate(reduced.n_features(), reduced.n_targets())?;
    Ok(fit(&reduced, cfg))
}

pub(super) fn fit(reduced: &ReducedProblem, cfg: &OptimizerConfig) -> FitResult {
    let started = Instant::now();
    let solver = Relaxed::new(reduced, cfg.nu);
    let columns = (0..reduced.n_targets())
        .map(|j| run(reduced, &solver, j, cfg, None))
        .collect();
    assemble(reduced.n_features(), columns, started)
}

/// Relax-and-split objective after every iteration, for target `j`.
pub fn sr3_objective_trace(problem: &RegressionProblem, cfg: &OptimizerConfig, j: usize) -> Result<Vec<f64>> {
    let reduced = ReducedProblem::new(problem)?;
    cfg.validate(reduced.n_features(), reduced.n_targets())?;
    let solver = Relaxed::new(&reduced, cfg.nu);
    let mut trace = Vec::new();
    run(&reduced, &solver, j, cfg, Some(&mut trace));
    Ok(trace)
}

/// ξ-update operator: ξ = b_j + A w solves (ΘᵀΘ + I/ν) ξ = Θᵀy + w/ν.
struct Relaxed {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    nu: f64,
}

impl Relaxed {
    fn new(reduced: &ReducedProblem, nu: f64) -> Self {
        let p = reduced.n_features();
        let r = reduced.r();
        let rows = r.nrows();
        // QR of [R; I/√ν] avoids forming the squared system
        let mut m = DMatrix::zeros(rows + p, p);
        m.rows_mut(0, rows).copy_from(r);
        let s = 1.0 / nu.sqrt();
        for i in 0..p {
            m[(rows + i, i)] = s;
        }
        let qr = m.qr();
        let q = qr.q();
        let rm = qr.r();
        let q1t_z = q.rows(0, rows).tr_mul(reduced.z());
        let q2t = q.rows(rows, p).transpose() * s;
        let b = rm.solve_upper_triangular(&q1t_z).expect("[R; I/sqrt(nu)] has full rank");
        let a = rm.solve_upper_triangular(&q2t).expect("[R; I/sqrt(nu)] has full rank");
        Relaxed { a, b, nu }
    }

    fn xi(&self, j: usize, w: &DVector<f64>) -> DVector<f64> {
        &self.a * w + self.b.column(j)
    }
}

fn objective(reduced: &ReducedProblem, j: usize, xi: &DVector<f64>, w: &DVector<f64>, lambda: f64, nu: f64) -> f64 {
    let nnz = w.iter().filter(|v| **v != 0.0).count() as f64;
    0.5 * reduced.rss(j, xi.as_slice()) + lambda * nnz + (xi - w).norm_squared() / (2.0 * nu)
}

fn run(
    reduced: &ReducedProblem,
    solver: &Relaxed,
    j: usize,
    cfg: &OptimizerConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> ColumnOutcome {
    let p = reduced.n_features();
    let tau = cfg.sr3_threshold();
    let threshold = |xi: &DVector<f64>| xi.map(|v| if v.abs() > tau { v } else { 0.0 });

    let all: Vec<usize> = (0..p).collect();
    let ls = reduced.solve_subset(j, &all, 0.0);
    let mut xi = DVector::from_vec(ls.coefficients);
    let mut w = threshold(&xi);
    if let Some(t) = trace.as_deref_mut() {
        t.push(objective(reduced, j, &xi, &w, cfg.threshold, solver.nu));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        xi = solver.xi(j, &w);
        let w_new = threshold(&xi);
        let change = (&w_new - &w).norm();
        w = w_new;
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective(reduced, j, &xi, &w, cfg.threshold, solver.nu));
        }
        if change < cfg.convergence_tol {
            converged = true;
            break;
        }
    }
    let support: Vec<usize> = (0..p).filter(|&k| w[k] != 0.0).collect();
    let refit = reduced.solve_subset(j, &support, 0.0);
    ColumnOutcome {
        coefficients: ColumnOutcome::from_support(p, &support, &refit.coefficients),
        iterations,
        proved_optimal: true,
        converged,
        rank_deficient: refit.rank_deficient,
    }
}
