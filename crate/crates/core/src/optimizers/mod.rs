//! Sparse regression for `Θ ξ ≈ y`, one target column at a time.
//!
//! All optimizers work on a [`ReducedProblem`], so callers that fit many
//! hyperparameters on the same data can factor Θ once.

mod lasso;
mod miosr;
mod reduced;
mod sr3;
mod stlsq;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RegressionProblem;

pub use lasso::lasso_cd;
pub use miosr::{exhaustive_best_subset, miosr, ColumnFit};
pub use reduced::{ReducedProblem, SubsetSolve};
pub use sr3::{sr3, sr3_objective_trace};
pub use stlsq::stlsq;

/// Coefficients below this magnitude count as zero everywhere.
pub const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Stlsq,
    Lasso,
    Sr3,
    Miosr,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Stlsq => "stlsq",
            OptimizerKind::Lasso => "lasso",
            OptimizerKind::Sr3 => "sr3",
            OptimizerKind::Miosr => "miosr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub variant: OptimizerKind,
    /// STLSQ hard threshold, or the ℓ0 weight λ of SR3.
    pub threshold: f64,
    pub ridge: f64,
    pub l1_alpha: f64,
    pub nu: f64,
    pub sparsity_budgets: Vec<usize>,
    pub time_limit_per_dim: f64,
    /// Deterministic cap on branch-and-bound nodes per dimension.
    pub max_nodes: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl OptimizerConfig {
    fn base(variant: OptimizerKind) -> Self {
        OptimizerConfig {
            variant,
            threshold: 0.0,
            ridge: 1e-5,
            l1_alpha: 0.0,
            nu: 1.0,
            sparsity_budgets: Vec::new(),
            time_limit_per_dim: 5.0,
            max_nodes: 50_000,
            max_iterations: 100,
            convergence_tol: 1e-8,
        }
    }

    pub fn stlsq(threshold: f64) -> Self {
        OptimizerConfig {
            threshold,
            ..Self::base(OptimizerKind::Stlsq)
        }
    }

    pub fn lasso(alpha: f64) -> Self {
        OptimizerConfig {
            l1_alpha: alpha,
            max_iterations: 10_000,
            ..Self::base(OptimizerKind::Lasso)
        }
    }

    /// SR3 with ℓ0 weight `lambda`; the auxiliary variable is thresholded
    /// at √(2λν).
    pub fn sr3(lambda: f64, nu: f64) -> Self {
        OptimizerConfig {
            threshold: lambda,
            nu,
            max_iterations: 1000,
            convergence_tol: 1e-6,
            ..Self::base(OptimizerKind::Sr3)
        }
    }

    /// SR3 parametrised by its hard-threshold level τ = √(2λν), which is
    /// on the same scale as an STLSQ threshold.
    pub fn sr3_from_threshold(tau: f64, nu: f64) -> Self {
        Self::sr3(tau * tau / (2.0 * nu), nu)
    }

    pub fn miosr(budgets: Vec<usize>) -> Self {
        OptimizerConfig {
            sparsity_budgets: budgets,
            ..Self::base(OptimizerKind::Miosr)
        }
    }

    /// Hard-threshold level applied by SR3's w-update.
    pub fn sr3_threshold(&self) -> f64 {
        (2.0 * self.threshold * self.nu).sqrt()
    }

    pub fn validate(&self, p: usize, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::argument(m));
        if !(self.max_iterations > 0) || !(self.convergence_tol > 0.0) {
            return bad("max_iterations and convergence_tol must be positive".into());
        }
        match self.variant {
            OptimizerKind::Stlsq => {
                if !(self.threshold >= 0.0) || !(self.ridge >= 0.0) {
                    return bad(format!("stlsq needs threshold >= 0 and ridge >= 0, got {} and {}", self.threshold, self.ridge));
                }
            }
            OptimizerKind::Lasso => {
                if !(self.l1_alpha >= 0.0) {
                    return bad(format!("lasso alpha must be >= 0, got {}", self.l1_alpha));
                }
            }
            OptimizerKind::Sr3 => {
                if !(self.threshold >= 0.0) || !(self.nu > 0.0) {
                    return bad(format!("sr3 needs lambda >= 0 and nu > 0, got {} and {}", self.threshold, self.nu));
                }
            }
            OptimizerKind::Miosr => {
                if self.sparsity_budgets.len() != d {
                    return bad(format!(
                        "miosr needs {d} sparsity budgets, got {}",
                        self.sparsity_budgets.len()
                    ));
                }
                if let Some(k) = self.sparsity_budgets.iter().find(|&&k| k == 0 || k > p) {
                    return bad(format!("sparsity budget {k} outside 1..={p}"));
                }
                if !(self.time_limit_per_dim > 0.0) || self.max_nodes == 0 {
                    return bad("miosr needs a positive time limit and node budget".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: DMatrix<f64>,
    pub support: Vec<Vec<usize>>,
    pub iterations: Vec<usize>,
    /// Exactness certificate for MIOSR; true for the other optimizers.
    pub proved_optimal: Vec<bool>,
    /// Lasso/SR3 stopped on the iteration cap.
    pub converged: Vec<bool>,
    /// A least-squares solve fell back to the pseudoinverse.
    pub rank_deficient: Vec<bool>,
    pub runtime_seconds: f64,
}

impl FitResult {
    pub fn nonzero_count(&self) -> usize {
        self.support.iter().map(Vec::len).sum()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// One solved column before assembly into a [`FitResult`].
#[derive(Debug, Clone)]
pub(crate) struct ColumnOutcome {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub proved_optimal: bool,
    pub converged: bool,
    pub rank_deficient: bool,
}

impl ColumnOutcome {
    pub fn from_support(p: usize, support: &[usize], values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for (&k, &v) in support.iter().zip(values) {
            out[k] = v;
        }
        out
    }
}

pub(crate) fn assemble(p: usize, columns: Vec<ColumnOutcome>, started: Instant) -> FitResult {
    let d = columns.len();
    let mut coefficients = DMatrix::zeros(p, d);
    let mut support = Vec::with_capacity(d);
    for (j, col) in columns.iter().enumerate() {
        let mut s = Vec::new();
        for (k, &v) in col.coefficients.iter().enumerate() {
            if v.abs() >= ZERO_TOL {
                coefficients[(k, j)] = v;
                s.push(k);
            }
        }
        support.push(s);
    }
    FitResult {
        coefficients,
        support,
        iterations: columns.iter().map(|c| c.iterations).collect(),
        proved_optimal: columns.iter().map(|c| c.proved_optimal).collect(),
        converged: columns.iter().map(|c| c.converged).collect(),
        rank_deficient: columns.iter().map(|c| c.rank_deficient).collect(),
        runtime_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Runs the optimizer selected by `cfg.variant`.
pub fn fit(problem: &RegressionProblem, cfg: &OptimizerConfig) -> Result<FitResult> {
    let reduced = ReducedProblem::new(problem)?;
    fit_reduced(&reduced, cfg)
}

pub fn fit_reduced(reduced: &ReducedProblem, cfg: &OptimizerConfig) -> Result<FitResult> {
    cfg.validate(reduced.n_features(), reduced.n_targets())?;
    Ok(match cfg.variant {
        OptimizerKind::Stlsq => stlsq::fit(reduced, cfg),
        OptimizerKind::Lasso => lasso::fit(reduced, cfg),
        OptimizerKind::Sr3 => sr3::fit(reduced, cfg),
        OptimizerKind::Miosr => miosr::fit(reduced, cfg),
    })
}

/// Like [`fit_reduced`], but Lasso starts coordinate descent from `start`.
/// The other optimizers ignore the warm start.
pub(crate) fn fit_reduced_warm(
    reduced: &ReducedProblem,
    cfg: &OptimizerConfig,
    start: Option<&DMatrix<f64>>,
) -> Result<FitResult> {
    cfg.validate(reduced.n_features(), reduced.n_targets())?;
    match (cfg.variant, start) {
        (OptimizerKind::Lasso, Some(_)) => Ok(lasso::fit_warm(reduced, cfg, start)),
        _ => fit_reduced(reduced, cfg),
    }
}

/// Largest coefficient magnitude of the unregularized least-squares fit.
pub fn max_least_squares_coefficient(reduced: &ReducedProblem) -> f64 {
    let all: Vec<usize> = (0..reduced.n_features()).collect();
    (0..reduced.n_targets())
        .flat_map(|j| reduced.solve_subset(j, &all, 0.0).coefficients)
        .fold(0.0, |m, c| m.max(c.abs()))
}
