//! Model selection: subsampled ensembles scored by the corrected AIC over a
//! hyperparameter grid.

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::RegressionProblem;
use crate::metrics::{coefficient_error, rmse_error};
use crate::optimizers::{
    fit_reduced, fit_reduced_warm, max_least_squares_coefficient, FitResult, OptimizerConfig,
    OptimizerKind, ReducedProblem,
};
use crate::seed;
use crate::systems::PolynomialSystem;

/// Residuals are clamped to this before taking the logarithm.
pub const AIC_RESIDUAL_FLOOR: f64 = 1e-300;

/// Default largest MIOSR budget in a grid.
pub const DEFAULT_MAX_BUDGET: usize = 10;

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hyperparameter {
    /// STLSQ threshold, or the SR3 hard-threshold level `√(2λν)`.
    Threshold(f64),
    /// Lasso ℓ1 weight.
    Alpha(f64),
    /// MIOSR sparsity budget per state dimension.
    Budget(Vec<usize>),
}

impl Hyperparameter {
    /// The hyperparameter `cfg` is currently set to.
    pub fn of(cfg: &OptimizerConfig) -> Self {
        match cfg.variant {
            OptimizerKind::Stlsq => Hyperparameter::Threshold(cfg.threshold),
            OptimizerKind::Sr3 => Hyperparameter::Threshold(cfg.sr3_threshold()),
            OptimizerKind::Lasso => Hyperparameter::Alpha(cfg.l1_alpha),
            OptimizerKind::Miosr => Hyperparameter::Budget(cfg.sparsity_budgets.clone()),
        }
    }

    /// Copy of `template` with this hyperparameter applied.
    pub fn configure(&self, template: &OptimizerConfig) -> Result<OptimizerConfig> {
        let mut cfg = template.clone();
        match (template.variant, self) {
            (OptimizerKind::Stlsq, Hyperparameter::Threshold(t)) => cfg.threshold = *t,
            (OptimizerKind::Sr3, Hyperparameter::Threshold(t)) => cfg.threshold = t * t / (2.0 * cfg.nu),
            (OptimizerKind::Lasso, Hyperparameter::Alpha(a)) => cfg.l1_alpha = *a,
            (OptimizerKind::Miosr, Hyperparameter::Budget(k)) => cfg.sparsity_budgets = k.clone(),
            (variant, h) => {
                return Err(Error::argument(format!(
                    "hyperparameter {h} does not apply to {}",
                    variant.name()
                )))
            }
        }
        Ok(cfg)
    }

    /// True if `self` should produce a sparser model than `other`.
    fn sparser_than(&self, other: &Hyperparameter) -> bool {
        match (self, other) {
            (Hyperparameter::Threshold(a), Hyperparameter::Threshold(b))
            | (Hyperparameter::Alpha(a), Hyperparameter::Alpha(b)) => a > b,
            (Hyperparameter::Budget(a), Hyperparameter::Budget(b)) => {
                a.iter().sum::<usize>() < b.iter().sum::<usize>()
            }
            _ => false,
        }
    }
}

impl fmt::Display for Hyperparameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyperparameter::Threshold(v) | Hyperparameter::Alpha(v) => write!(f, "{v:e}"),
            Hyperparameter::Budget(k) => {
                if k.windows(2).all(|w| w[0] == w[1]) && !k.is_empty() {
                    write!(f, "{}", k[0])
                } else {
                    let parts: Vec<String> = k.iter().map(usize::to_string).collect();
                    write!(f, "{}", parts.join(";"))
                }
            }
        }
    }
}

/// Restricts `problem` to `⌊fraction·N⌋` rows drawn without replacement.
/// The chosen rows keep their original order.
pub fn subsample_rows(problem: &RegressionProblem, fraction: f64, seed: u64) -> Result<RegressionProblem> {
    let rows = subsample_indices(problem, fraction, seed)?;
    problem.select_rows(&rows)
}

fn subsample_indices(problem: &RegressionProblem, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::argument(format!("subsample fraction must be in (0, 1], got {fraction}")));
    }
    let n = problem.n_rows();
    let m = (fraction * n as f64).floor() as usize;
    if m < problem.n_features() {
        return Err(Error::argument(format!(
            "subsample keeps {m} of {n} rows, fewer than the {} features",
            problem.n_features()
        )));
    }
    let mut rows = index::sample(&mut seed::rng(seed), n, m).into_vec();
    rows.sort_unstable();
    Ok(rows)
}

/// Seed of ensemble member `i`.
pub fn member_seed(master_seed: u64, i: usize) -> u64 {
    derive_seed!(master_seed, "member", i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberFailure {
    pub index: usize,
    pub seed: u64,
    pub message: String,
}

/// Fits of one hyperparameter on independent row subsamples.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub hyperparameter: Hyperparameter,
    /// Successful members, in member order.
    pub members: Vec<FitResult>,
    /// Seeds of `members`, aligned with it.
    pub member_seeds: Vec<u64>,
    pub failures: Vec<MemberFailure>,
}

impl EnsembleResult {
    pub fn n_models(&self) -> usize {
        self.members.len() + self.failures.len()
    }

    /// Element-wise mean of the member coefficient matrices.
    pub fn mean_coefficients(&self) -> Option<DMatrix<f64>> {
        let first = self.members.first()?;
        let mut sum = DMatrix::zeros(first.coefficients.nrows(), first.coefficients.ncols());
        for m in &self.members {
            sum += &m.coefficients;
        }
        Some(sum / self.members.len() as f64)
    }

    fn collect(
        hyperparameter: Hyperparameter,
        outcomes: impl IntoIterator<Item = (u64, std::result::Result<FitResult, String>)>,
    ) -> Self {
        let mut out = EnsembleResult {
            hyperparameter,
            members: Vec::new(),
            member_seeds: Vec::new(),
            failures: Vec::new(),
        };
        for (index, (seed, outcome)) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(fit) => {
                    out.members.push(fit);
                    out.member_seeds.push(seed);
                }
                Err(message) => out.failures.push(MemberFailure { index, seed, message }),
            }
        }
        out
    }
}

fn check_ensemble_args(problem: &RegressionProblem, n_models: usize, fraction: f64) -> Result<()> {
    if n_models == 0 {
        return Err(Error::argument("an ensemble needs at least one model"));
    }
    subsample_indices(problem, fraction, 0).map(|_| ())
}

/// Fits `n_models` members, each on its own row subsample. A failing member
/// is recorded in `failures` and does not stop the others.
pub fn fit_ensemble(
    problem: &RegressionProblem,
    cfg: &OptimizerConfig,
    n_models: usize,
    fraction: f64,
    master_seed: u64,
) -> Result<EnsembleResult> {
    check_ensemble_args(problem, n_models, fraction)?;
    let outcomes: Vec<_> = (0..n_models)
        .into_par_iter()
        .map(|i| {
            let seed = member_seed(master_seed, i);
            let fit = subsample_rows(problem, fraction, seed)
                .and_then(|sub| ReducedProblem::new(&sub))
                .and_then(|r| fit_reduced(&r, cfg))
                .map_err(|e| e.to_string());
            (seed, fit)
        })
        .collect();
    Ok(EnsembleResult::collect(Hyperparameter::of(cfg), outcomes))
}

/// Corrected AIC for `m` test rows, `k` nonzero terms and squared residual `rss`.
/// Returns +∞ when `m − k − 1 ≤ 0` or the residual is not finite.
pub fn aic_value(m: usize, k: usize, rss: f64) -> f64 {
    if m <= k + 1 || rss.is_nan() || rss == f64::INFINITY {
        return f64::INFINITY;
    }
    let (m, k) = (m as f64, k as f64);
    m * rss.max(AIC_RESIDUAL_FLOOR).ln() + 2.0 * k + 2.0 * k * (k + 1.0) / (m - k - 1.0)
}

/// Corrected AIC of `model` on a clean pointwise test problem whose targets
/// are the exact derivatives. `k` counts nonzeros over all equations.
pub fn aic_c(model: &FitResult, test: &RegressionProblem) -> f64 {
    if model.coefficients.shape() != (test.n_features(), test.n_targets()) {
        return f64::INFINITY;
    }
    let rss = (test.targets() - test.predict(&model.coefficients)).norm_squared();
    aic_value(test.n_rows(), model.nonzero_count(), rss)
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (ratio * i as f64 / (n - 1) as f64).exp() })
        .collect()
}

fn positive_or_one(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        v
    } else {
        1.0
    }
}

/// Hyperparameter grid for `variant`, ordered from least to most
/// regularization for thresholds and α, and by increasing budget for MIOSR.
pub fn hyperparameter_grid(
    variant: OptimizerKind,
    n_points: usize,
    problem: &RegressionProblem,
) -> Result<Vec<Hyperparameter>> {
    let reduced = ReducedProblem::new(problem)?;
    Ok(grid_for_reduced(variant, n_points, &reduced, DEFAULT_MAX_BUDGET))
}

/// Grid construction on an already factored problem.
pub fn grid_for_reduced(
    variant: OptimizerKind,
    n_points: usize,
    reduced: &ReducedProblem,
    max_budget: usize,
) -> Vec<Hyperparameter> {
    let n_points = n_points.max(1);
    match variant {
        OptimizerKind::Stlsq | OptimizerKind::Sr3 => {
            let c = positive_or_one(max_least_squares_coefficient(reduced));
            logspace(1e-4 * c, c, n_points).into_iter().map(Hyperparameter::Threshold).collect()
        }
        OptimizerKind::Lasso => {
            let a = positive_or_one(reduced.cross().amax());
            logspace(1e-6 * a, a, n_points).into_iter().map(Hyperparameter::Alpha).collect()
        }
        OptimizerKind::Miosr => {
            let top = max_budget.min(reduced.n_features()).max(1);
            (1..=top).map(|k| Hyperparameter::Budget(vec![k; reduced.n_targets()])).collect()
        }
    }
}

/// Member-mean scores of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub hyperparameter: Hyperparameter,
    pub mean_aic: f64,
    pub mean_e_coef: f64,
    pub mean_e_rmse: f64,
    pub mean_k: f64,
    /// At least one member fit succeeded.
    pub valid: bool,
    pub n_failed: usize,
}

#[derive(Debug, Clone)]
pub struct ParetoScanResult {
    pub records: Vec<ScanRecord>,
    pub best_index: usize,
    pub best_ensemble: EnsembleResult,
}

impl ParetoScanResult {
    pub fn best(&self) -> &ScanRecord {
        &self.records[self.best_index]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Evaluation(format!("writing scan records: {e}"));
        w.write_record(["hyperparameter", "mean_aic", "mean_e_coef", "mean_e_rmse", "mean_k", "valid"])
            .map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.hyperparameter.to_string(),
                r.mean_aic.to_string(),
                r.mean_e_coef.to_string(),
                r.mean_e_rmse.to_string(),
                r.mean_k.to_string(),
                r.valid.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Evaluation(format!("writing scan records: {e}")))
    }
}

/// Fits one ensemble per grid point on `train` and scores each member on the
/// clean pointwise `test` problem. Every grid point reuses the same member
/// subsamples, so the factorization of each subsample is computed once.
#[allow(clippy::too_many_arguments)]
pub fn pareto_scan(
    train: &RegressionProblem,
    test: &RegressionProblem,
    truth: &PolynomialSystem,
    cfg_template: &OptimizerConfig,
    grid: &[Hyperparameter],
    n_models: usize,
    fraction: f64,
    master_seed: u64,
) -> Result<ParetoScanResult> {
    if grid.is_empty() {
        return Err(Error::argument("hyperparameter grid is empty"));
    }
    check_ensemble_args(train, n_models, fraction)?;
    let shape = (train.n_features(), train.n_targets());
    if truth.coefficients().shape() != shape || (test.n_features(), test.n_targets()) != shape {
        return Err(Error::argument(format!(
            "train {:?}, test {:?} and truth {:?} coefficient shapes differ",
            shape,
            (test.n_features(), test.n_targets()),
            truth.coefficients().shape()
        )));
    }
    let configs: Vec<OptimizerConfig> = grid.iter().map(|h| h.configure(cfg_template)).collect::<Result<_>>()?;
    // fail on hopeless inputs before fitting anything
    coefficient_error(truth.coefficients(), &DMatrix::zeros(shape.0, shape.1))?;
    rmse_error(test.targets(), &DMatrix::zeros(test.n_rows(), shape.1))?;
    let scorer = TestScorer::new(test)?;

    // fits[i][g]: member i at grid point g
    let fits: Vec<(u64, Vec<std::result::Result<FitResult, String>>)> = (0..n_models)
        .into_par_iter()
        .map(|i| {
            let seed = member_seed(master_seed, i);
            let reduced = match subsample_rows(train, fraction, seed).and_then(|s| ReducedProblem::new(&s)) {
                Ok(r) => r,
                Err(e) => return (seed, vec![Err(e.to_string()); grid.len()]),
            };
            (seed, scan_member(&reduced, &configs))
        })
        .collect();

    let mut records = Vec::with_capacity(grid.len());
    for (g, h) in grid.iter().enumerate() {
        let mut acc = [0.0; 4];
        let mut n_ok = 0usize;
        for (_, member) in &fits {
            if let Ok(fit) = &member[g] {
                let rss = scorer.rss(&fit.coefficients);
                acc[0] += aic_value(scorer.n_rows, fit.nonzero_count(), rss);
                acc[1] += coefficient_error(truth.coefficients(), &fit.coefficients)?;
                acc[2] += rss.sqrt() / scorer.target_norm;
                acc[3] += fit.nonzero_count() as f64;
                n_ok += 1;
            }
        }
        let mean = |v: f64| if n_ok > 0 { v / n_ok as f64 } else { f64::NAN };
        records.push(ScanRecord {
            hyperparameter: h.clone(),
            mean_aic: mean(acc[0]),
            mean_e_coef: mean(acc[1]),
            mean_e_rmse: mean(acc[2]),
            mean_k: mean(acc[3]),
            valid: n_ok > 0 && !mean(acc[0]).is_nan(),
            n_failed: n_models - n_ok,
        });
    }

    let best_index = best_record(&records)
        .ok_or_else(|| Error::Evaluation("every grid point failed for every ensemble member".into()))?;
    let best_ensemble = EnsembleResult::collect(
        grid[best_index].clone(),
        fits.into_iter().map(|(seed, mut member)| (seed, member.swap_remove(best_index))),
    );
    Ok(ParetoScanResult { records, best_index, best_ensemble })
}

/// Test-set residuals through the QR factors of the test library, so each
/// model costs `O(p²)` instead of a pass over all test rows.
struct TestScorer {
    reduced: ReducedProblem,
    n_rows: usize,
    target_norm: f64,
}

impl TestScorer {
    fn new(test: &RegressionProblem) -> Result<Self> {
        let plain = RegressionProblem::unstructured(test.features().clone(), test.targets().clone(), test.form())?;
        Ok(TestScorer {
            reduced: ReducedProblem::new(&plain)?,
            n_rows: test.n_rows(),
            target_norm: test.targets().norm(),
        })
    }

    /// `‖Y − Θ Ξ‖²_F` over all target columns.
    fn rss(&self, coefficients: &DMatrix<f64>) -> f64 {
        coefficients
            .column_iter()
            .enumerate()
            .map(|(j, c)| self.reduced.rss(j, c.as_slice()))
            .sum()
    }
}

/// Fits one member at every grid point. Lasso walks the grid from the
/// largest α down, warm-starting each fit from the previous one.
fn scan_member(reduced: &ReducedProblem, configs: &[OptimizerConfig]) -> Vec<std::result::Result<FitResult, String>> {
    let mut out: Vec<Option<std::result::Result<FitResult, String>>> = vec![None; configs.len()];
    let lasso = configs.first().is_some_and(|c| c.variant == OptimizerKind::Lasso);
    let mut order: Vec<usize> = (0..configs.len()).collect();
    if lasso {
        order.sort_by(|&a, &b| configs[b].l1_alpha.total_cmp(&configs[a].l1_alpha));
    }
    let mut previous: Option<DMatrix<f64>> = None;
    for g in order {
        let start = if lasso { previous.as_ref() } else { None };
        let fit = fit_reduced_warm(reduced, &configs[g], start).map_err(|e| e.to_string());
        if let Ok(f) = &fit {
            previous = Some(f.coefficients.clone());
        }
        out[g] = Some(fit);
    }
    out.into_iter().map(|f| f.expect("every grid point visited")).collect()
}

/// Index of the smallest mean AIC among valid records, preferring the
/// sparser hyperparameter on exact ties.
fn best_record(records: &[ScanRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if !r.valid {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &records[b];
                let better = r.mean_aic < cur.mean_aic
                    || (r.mean_aic == cur.mean_aic && r.hyperparameter.sparser_than(&cur.hyperparameter));
                Some(if better { i } else { b })
            }
        };
    }
    best
}
