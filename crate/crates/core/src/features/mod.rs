//! Regression problems `Θ ξ ≈ y`: feature libraries, numerical derivatives
//! and the weak (integral) formulation.

mod weak;

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::simulate::Trajectory;
use crate::systems::{MonomialBasis, PolynomialSystem};

pub use weak::{assemble_weak, weak_subdomains, Subdomain, WeakConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemForm {
    Pointwise,
    Weak,
}

/// Feature matrix Θ (N×p) and targets (N×d) over a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    features: DMatrix<f64>,
    targets: DMatrix<f64>,
    // absent for problems built from raw matrices
    basis: Option<MonomialBasis>,
    form: ProblemForm,
    row_weights: Option<Vec<f64>>,
}

impl RegressionProblem {
    pub fn new(
        features: DMatrix<f64>,
        targets: DMatrix<f64>,
        basis: MonomialBasis,
        form: ProblemForm,
    ) -> Result<Self> {
        if features.ncols() != basis.len() {
            return Err(Error::argument(format!(
                "features have {} columns but the basis has {} terms",
                features.ncols(),
                basis.len()
            )));
        }
        let mut out = Self::unstructured(features, targets, form)?;
        out.basis = Some(basis);
        Ok(out)
    }

    /// Problem over arbitrary feature columns with no monomial basis.
    pub fn unstructured(features: DMatrix<f64>, targets: DMatrix<f64>, form: ProblemForm) -> Result<Self> {
        if features.nrows() != targets.nrows() {
            return Err(Error::argument(format!(
                "features have {} rows but targets have {}",
                features.nrows(),
                targets.nrows()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::argument("features need at least one column"));
        }
        if targets.ncols() == 0 {
            return Err(Error::argument("targets need at least one column"));
        }
        if features.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::argument("regression problem contains non-finite entries"));
        }
        Ok(RegressionProblem {
            features,
            targets,
            basis: None,
            form,
            row_weights: None,
        })
    }

    /// Attaches positive per-row weights (least-squares rows are scaled by √w).
    pub fn with_row_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n_rows() {
            return Err(Error::argument("row weight count differs from row count"));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::argument("row weights must be positive and finite"));
        }
        self.row_weights = Some(weights);
        Ok(self)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn basis(&self) -> Option<&MonomialBasis> {
        self.basis.as_ref()
    }

    pub fn form(&self) -> ProblemForm {
        self.form
    }

    pub fn row_weights(&self) -> Option<&[f64]> {
        self.row_weights.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.ncols()
    }

    /// Problem restricted to `rows` (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows()) {
            return Err(Error::argument(format!("row index {bad} out of range")));
        }
        let features = self.features.select_rows(rows);
        let targets = self.targets.select_rows(rows);
        Ok(RegressionProblem {
            features,
            targets,
            basis: self.basis.clone(),
            form: self.form,
            row_weights: self
                .row_weights
                .as_ref()
                .map(|w| rows.iter().map(|&r| w[r]).collect()),
        })
    }

    /// Problem with target columns reordered (or a subset) as in `cols`.
    pub fn select_targets(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_targets()) {
            return Err(Error::argument(format!("target column {bad} out of range")));
        }
        let mut out = self.clone();
        out.targets = self.targets.select_columns(cols);
        Ok(out)
    }

    /// Θ·Ξ.
    pub fn predict(&self, coefficients: &DMatrix<f64>) -> DMatrix<f64> {
        &self.features * coefficients
    }

    /// Writes feature and target columns side by side, for debugging.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::argument(format!("csv write failed: {e}"));
        let mut header: Vec<String> = (0..self.n_features())
            .map(|k| match &self.basis {
                Some(b) => format!("theta[{}]", b.term_name(k)),
                None => format!("theta[{k}]"),
            })
            .collect();
        header.extend((1..=self.n_targets()).map(|j| format!("target_x{j}")));
        w.write_record(&header).map_err(err)?;
        for i in 0..self.n_rows() {
            let rec: Vec<String> = self
                .features
                .row(i)
                .iter()
                .chain(self.targets.row(i).iter())
                .map(|v| format!("{v:.16e}"))
                .collect();
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()
            .map_err(|e| Error::argument(format!("csv write failed: {e}")))
    }
}

/// Θ(X): one row per state, one column per basis term.
pub fn evaluate_library(basis: &MonomialBasis, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if states.ncols() != basis.dimension() {
        return Err(Error::argument(format!(
            "states have {} columns, basis dimension is {}",
            states.ncols(),
            basis.dimension()
        )));
    }
    let (m, p) = (states.nrows(), basis.len());
    let stride = basis.max_degree() as usize + 1;
    let mut powers = vec![0.0; basis.dimension() * stride];
    let mut row_state = vec![0.0; basis.dimension()];
    let mut row = vec![0.0; p];
    let mut out = DMatrix::zeros(m, p);
    for i in 0..m {
        for (j, v) in row_state.iter_mut().enumerate() {
            *v = states[(i, j)];
        }
        basis.eval_into(&row_state, &mut powers, &mut row);
        for (k, v) in row.iter().enumerate() {
            out[(i, k)] = *v;
        }
    }
    Ok(out)
}

/// Second-order finite differences: central inside, one-sided at the ends.
pub fn finite_difference(traj: &Trajectory) -> Result<DMatrix<f64>> {
    let m = traj.len();
    if m < 3 {
        return Err(Error::argument(format!(
            "finite differences need at least 3 samples, got {m}"
        )));
    }
    let x = traj.states();
    let h = traj.dt();
    let mut dx = DMatrix::zeros(m, traj.dimension());
    for j in 0..traj.dimension() {
        dx[(0, j)] = (-3.0 * x[(0, j)] + 4.0 * x[(1, j)] - x[(2, j)]) / (2.0 * h);
        for i in 1..m - 1 {
            dx[(i, j)] = (x[(i + 1, j)] - x[(i - 1, j)]) / (2.0 * h);
        }
        dx[(m - 1, j)] =
            (3.0 * x[(m - 1, j)] - 4.0 * x[(m - 2, j)] + x[(m - 3, j)]) / (2.0 * h);
    }
    Ok(dx)
}

fn check_dimensions(trajs: &[Trajectory], d: usize) -> Result<()> {
    if trajs.is_empty() {
        return Err(Error::argument("at least one trajectory is required"));
    }
    if let Some(t) = trajs.iter().find(|t| t.dimension() != d) {
        return Err(Error::argument(format!(
            "trajectory of dimension {} does not match basis dimension {d}",
            t.dimension()
        )));
    }
    Ok(())
}

fn stack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks[0].ncols();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.nrows()).copy_from(b);
        at += b.nrows();
    }
    out
}

/// Stacks Θ and finite-difference derivatives of every trajectory.
/// Derivative stencils never cross trajectory boundaries.
pub fn assemble_pointwise(trajs: &[Trajectory], basis: &MonomialBasis) -> Result<RegressionProblem> {
    check_dimensions(trajs, basis.dimension())?;
    let theta: Vec<_> = trajs
        .iter()
        .map(|t| evaluate_library(basis, t.states()))
        .collect::<Result<_>>()?;
    let dx: Vec<_> = trajs.iter().map(finite_difference).collect::<Result<_>>()?;
    RegressionProblem::new(stack(&theta), stack(&dx), basis.clone(), ProblemForm::Pointwise)
}

/// Pointwise problem whose targets are the exact right-hand side of `truth`
/// at the sampled states. Used for clean test data.
pub fn assemble_exact(trajs: &[Trajectory], truth: &PolynomialSystem) -> Result<RegressionProblem> {
    let basis = truth.basis();
    check_dimensions(trajs, basis.dimension())?;
    let theta: Vec<_> = trajs
        .iter()
        .map(|t| evaluate_library(basis, t.states()))
        .collect::<Result<_>>()?;
    let features = stack(&theta);
    let targets = &features * truth.coefficients();
    RegressionProblem::new(features, targets, basis.clone(), ProblemForm::Pointwise)
}
