use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{assemble, ColumnOutcome, FitResult, OptimizerConfig, ReducedProblem};
use crate::error::Result;
use crate::features::RegressionProblem;

/// Cyclic coordinate descent on ½‖Θξ − y‖² + α‖ξ‖₁, finished by a
/// feature-sign search because collinear monomial columns leave plain
/// coordinate descent crawling.
pub fn lasso_cd(problem: &RegressionProblem, cfg: &OptimizerConfig) -> Result<FitResult> {
    let reduced = ReducedProblem::new(problem)?;
    cfg.validate(reduced.n_features(), reduced.n_targets())?;
    Ok(fit(&reduced, cfg))
}

pub(super) fn fit(reduced: &ReducedProblem, cfg: &OptimizerConfig) -> FitResult {
    fit_warm(reduced, cfg, None)
}

/// Same as [`lasso_cd`] but starting from `start` (p×d) instead of zero.
pub(crate) fn fit_warm(
    reduced: &ReducedProblem,
    cfg: &OptimizerConfig,
    start: Option<&DMatrix<f64>>,
) -> FitResult {
    let started = Instant::now();
    let p = reduced.n_features();
    let columns = (0..reduced.n_targets())
        .map(|j| {
            let init = start.map(|s| s.column(j).iter().copied().collect());
            column(reduced, j, cfg, init)
        })
        .collect();
    assemble(p, columns, started)
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn column(reduced: &ReducedProblem, j: usize, cfg: &OptimizerConfig, init: Option<Vec<f64>>) -> ColumnOutcome {
    let p = reduced.n_features();
    let g = reduced.gram();
    let c = reduced.cross();
    let alpha = cfg.l1_alpha;
    if let Some(x0) = &init {
        // a nearby optimum usually needs only a few active-set steps
        if let (Some(x), steps) = feature_sign(reduced, j, alpha, x0, 4 * p.max(1)) {
            return ColumnOutcome {
                coefficients: x,
                iterations: steps,
                proved_optimal: true,
                converged: true,
                rank_deficient: false,
            };
        }
    }
    let mut xi = init.unwrap_or_else(|| vec![0.0; p]);
    // grad[k] = (G ξ)_k, kept current after every coordinate update
    let mut gx: Vec<f64> = (0..p)
        .map(|k| (0..p).map(|l| g[(k, l)] * xi[l]).sum())
        .collect();

    let update = |k: usize, xi: &mut [f64], gx: &mut [f64]| -> f64 {
        let gkk = g[(k, k)];
        if gkk <= 0.0 {
            return 0.0;
        }
        let rho = c[(k, j)] - (gx[k] - gkk * xi[k]);
        let new = soft(rho, alpha) / gkk;
        let delta = new - xi[k];
        if delta != 0.0 {
            for l in 0..p {
                gx[l] += g[(l, k)] * delta;
            }
            xi[k] = new;
        }
        delta.abs()
    };

    let mut sweeps = 0;
    let mut converged = false;
    'outer: while sweeps < cfg.max_iterations {
        // full sweep
        sweeps += 1;
        let mut change: f64 = 0.0;
        for k in 0..p {
            change = change.max(update(k, &mut xi, &mut gx));
        }
        if change < cfg.convergence_tol {
            converged = true;
            break;
        }
        // iterate on the active set until it settles, then re-check all
        let active: Vec<usize> = (0..p).filter(|&k| xi[k] != 0.0).collect();
        loop {
            if sweeps >= cfg.max_iterations {
                break 'outer;
            }
            sweeps += 1;
            let mut change: f64 = 0.0;
            for &k in &active {
                change = change.max(update(k, &mut xi, &mut gx));
            }
            if change < cfg.convergence_tol {
                break;
            }
        }
    }
    let (polished, steps) = feature_sign(reduced, j, alpha, &xi, 50 * p.max(1));
    if let Some(x) = polished {
        xi = x;
        converged = true;
    }
    ColumnOutcome {
        coefficients: xi,
        iterations: sweeps + steps,
        proved_optimal: true,
        converged,
        rank_deficient: false,
    }
}

fn objective(reduced: &ReducedProblem, j: usize, alpha: f64, x: &[f64]) -> f64 {
    0.5 * reduced.rss(j, x) + alpha * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Minimizer of ½‖R_S β − z‖² + α θᵀβ over the columns in `active`, with
/// two rounds of iterative refinement on the normal equations.
fn signed_solve(reduced: &ReducedProblem, j: usize, alpha: f64, active: &[usize], theta: &[f64]) -> Option<Vec<f64>> {
    let rows = reduced.r().nrows();
    let n = active.len();
    if rows < n {
        return None;
    }
    let rs = DMatrix::from_fn(rows, n, |i, c| reduced.r()[(i, active[c])]);
    let t = rs.qr().r();
    let dmax = t.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(dmax > 0.0) || t.diagonal().iter().any(|v| v.abs() <= dmax * 1e-13) {
        return None;
    }
    let r = reduced.r();
    let z = reduced.z().column(j);
    // TᵀT = R_SᵀR_S, so each solve is two triangular solves
    let normal_solve = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
        let v = t.transpose().solve_lower_triangular(rhs)?;
        t.solve_upper_triangular(&v)
    };
    let rhs = DVector::from_fn(n, |a, _| r.column(active[a]).dot(&z) - alpha * theta[a]);
    let mut beta = normal_solve(&rhs)?;
    for _ in 0..2 {
        // residual of the normal equations, formed through z − R_S β
        let mut e = z.into_owned();
        for (a, &k) in active.iter().enumerate() {
            e.axpy(-beta[a], &r.column(k), 1.0);
        }
        let resid = DVector::from_fn(n, |a, _| r.column(active[a]).dot(&e) - alpha * theta[a]);
        beta += normal_solve(&resid)?;
    }
    beta.iter().all(|b| b.is_finite()).then(|| beta.iter().copied().collect())
}

/// Feature-sign search from `start`: exact solves on the active set with
/// fixed signs, a discrete line search over the sign changes, and
/// activation of the worst KKT violator. Returns the optimum once the KKT
/// conditions hold to a tolerance scaled by ‖R_k‖‖y‖.
fn feature_sign(reduced: &ReducedProblem, j: usize, alpha: f64, start: &[f64], max_steps: usize) -> (Option<Vec<f64>>, usize) {
    let p = reduced.n_features();
    let r = reduced.r();
    let z = reduced.z().column(j);
    let z_norm = reduced.null_rss(j).sqrt();
    let mut x = start.to_vec();
    let mut steps = 0;
    while steps < max_steps {
        steps += 1;
        // smooth-part gradient Rᵀ(Rx − z), formed through the small residual
        let mut e = -z.into_owned();
        for (l, &v) in x.iter().enumerate() {
            if v != 0.0 {
                e.axpy(v, &r.column(l), 1.0);
            }
        }
        let grad: Vec<f64> = (0..p).map(|k| r.column(k).dot(&e)).collect();
        let mut worst: Option<(f64, usize)> = None;
        let mut optimal = true;
        for k in 0..p {
            let tol = 1e-9 * (alpha + r.column(k).norm() * z_norm);
            let viol = if x[k] != 0.0 {
                (grad[k] + alpha * x[k].signum()).abs()
            } else {
                grad[k].abs() - alpha
            };
            if viol > tol {
                optimal = false;
                if x[k] == 0.0 && worst.is_none_or(|(w, _)| viol > w) {
                    worst = Some((viol, k));
                }
            }
        }
        if optimal {
            return (Some(x), steps);
        }
        let mut theta: Vec<f64> = x.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() }).collect();
        if let Some((_, k)) = worst {
            theta[k] = -grad[k].signum();
        }
        let active: Vec<usize> = (0..p).filter(|&k| theta[k] != 0.0).collect();
        let signs: Vec<f64> = active.iter().map(|&k| theta[k]).collect();
        let Some(beta) = signed_solve(reduced, j, alpha, &active, &signs) else {
            return (None, steps);
        };
        let mut target = vec![0.0; p];
        for (&k, &b) in active.iter().zip(&beta) {
            target[k] = b;
        }
        // candidates: the signed solution and every zero crossing on the way
        let mut ts = vec![1.0];
        for &k in &active {
            let (a, b) = (x[k], target[k]);
            if a != 0.0 && a.signum() != b.signum() && b != a {
                ts.push(a / (a - b));
            }
        }
        let mut best = (objective(reduced, j, alpha, &x), None);
        for &t in &ts {
            let mut y: Vec<f64> = (0..p).map(|k| x[k] + t * (target[k] - x[k])).collect();
            for &k in &active {
                let (a, b) = (x[k], target[k]);
                if a != 0.0 && (a - b) != 0.0 && (a / (a - b) - t).abs() <= 1e-15 {
                    y[k] = 0.0;
                }
            }
            let f = objective(reduced, j, alpha, &y);
            if f < best.0 {
                best = (f, Some(y));
            }
        }
        match (best.1, worst) {
            (Some(y), _) => x = y,
            // a new feature whose signed solution flips sign gives no descent
            // along the segment; a single coordinate update on it always does
            (None, Some((_, k))) => {
                let rk = r.column(k).norm_squared();
                x[k] = soft(rk * x[k] - grad[k], alpha) / rk;
            }
            (None, None) => return (None, steps),
        }
    }
    (None, steps)
}
