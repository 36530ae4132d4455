//! Polynomial ODE systems over a canonical monomial basis.
//!
//! A [`PolynomialSystem`] is `ẋ = Θ(x) Ξ`: the basis fixes the columns of Θ
//! and the `p × d` coefficient matrix Ξ holds one column per state variable.
//! The same type describes ground-truth systems and identified models.

mod basis;
mod io;
mod registry;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use basis::{monomial_basis, MonomialBasis, MAX_DEGREE, MAX_DIMENSION};
pub use io::{load_system, save_system, system_from_json, system_to_json, SystemFile};
pub use registry::{builtin_registry, builtin_system};

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    name: String,
    basis: MonomialBasis,
    coefficients: DMatrix<f64>,
    reference_ics: Vec<Vec<f64>>,
    dominant_period: f64,
    citation: String,
    // rows of `coefficients` with at least one nonzero entry
    active: Vec<usize>,
}

impl PolynomialSystem {
    pub fn new(
        name: impl Into<String>,
        basis: MonomialBasis,
        coefficients: DMatrix<f64>,
        reference_ics: Vec<Vec<f64>>,
        dominant_period: f64,
        citation: impl Into<String>,
    ) -> Result<Self> {
        let d = basis.dimension();
        if coefficients.nrows() != basis.len() {
            return Err(Error::parse(
                "coefficients",
                format!(
                    "expected {} coefficient rows for dimension {} and degree {}, found {}",
                    basis.len(),
                    d,
                    basis.max_degree(),
                    coefficients.nrows()
                ),
            ));
        }
        if coefficients.ncols() != d {
            return Err(Error::parse(
                "coefficients",
                format!("expected {d} columns, found {}", coefficients.ncols()),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::parse("coefficients", "non-finite coefficient"));
        }
        if reference_ics.is_empty() {
            return Err(Error::parse(
                "reference_ics",
                "at least one reference initial condition is required",
            ));
        }
        for (i, ic) in reference_ics.iter().enumerate() {
            if ic.len() != d {
                return Err(Error::parse(
                    "reference_ics",
                    format!("initial condition {i} has length {}, expected {d}", ic.len()),
                ));
            }
            if ic.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(
                    "reference_ics",
                    format!("initial condition {i} is not finite"),
                ));
            }
        }
        if !(dominant_period > 0.0 && dominant_period.is_finite()) {
            return Err(Error::parse(
                "dominant_period",
                format!("must be positive, got {dominant_period}"),
            ));
        }
        let active = active_rows(&coefficients);
        Ok(PolynomialSystem {
            name: name.into(),
            basis,
            coefficients,
            reference_ics,
            dominant_period,
            citation: citation.into(),
            active,
        })
    }

    /// Same metadata (ICs, period) with a different coefficient matrix.
    /// Used to turn a fitted Ξ into a simulable model.
    pub fn with_coefficients(&self, name: impl Into<String>, coefficients: DMatrix<f64>) -> Result<Self> {
        PolynomialSystem::new(
            name,
            self.basis.clone(),
            coefficients,
            self.reference_ics.clone(),
            self.dominant_period,
            self.citation.clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn reference_ics(&self) -> &[Vec<f64>] {
        &self.reference_ics
    }

    pub fn dominant_period(&self) -> f64 {
        self.dominant_period
    }

    pub fn citation(&self) -> &str {
        &self.citation
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }

    /// Highest total degree carrying a nonzero coefficient (0 for the zero system).
    pub fn effective_degree(&self) -> u32 {
        self.active
            .iter()
            .map(|&r| self.basis.degree_of(r))
            .max()
            .unwrap_or(0)
    }

    /// Right-hand side without input validation; `out` must have length d.
    pub(crate) fn rhs_into(&self, state: &[f64], out: &mut [f64]) {
        let stride = self.basis.max_degree() as usize + 1;
        let mut powers = [0.0; MAX_DIMENSION * (MAX_DEGREE as usize + 1)];
        basis::fill_powers(state, stride, &mut powers);
        out.iter_mut().for_each(|o| *o = 0.0);
        for &row in &self.active {
            let m = basis::monomial(self.basis.term(row), &powers, stride);
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.coefficients[(row, j)] * m;
            }
        }
    }

    /// Jacobian-vector product `J(state) · v` without validation.
    pub(crate) fn jvp_into(&self, state: &[f64], v: &[f64], out: &mut [f64]) {
        let d = self.dimension();
        let stride = self.basis.max_degree() as usize + 1;
        let mut powers = [0.0; MAX_DIMENSION * (MAX_DEGREE as usize + 1)];
        basis::fill_powers(state, stride, &mut powers);
        out.iter_mut().for_each(|o| *o = 0.0);
        for &row in &self.active {
            let term = self.basis.term(row);
            // directional derivative of the monomial along v
            let mut dm = 0.0;
            for k in 0..d {
                if term[k] == 0 || v[k] == 0.0 {
                    continue;
                }
                dm += v[k] * partial(term, k, &powers, stride);
            }
            if dm == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.coefficients[(row, j)] * dm;
            }
        }
    }

    pub(crate) fn jacobian_into(&self, state: &[f64], jac: &mut DMatrix<f64>) {
        let d = self.dimension();
        let stride = self.basis.max_degree() as usize + 1;
        let mut powers = [0.0; MAX_DIMENSION * (MAX_DEGREE as usize + 1)];
        basis::fill_powers(state, stride, &mut powers);
        jac.fill(0.0);
        for &row in &self.active {
            let term = self.basis.term(row);
            for k in 0..d {
                if term[k] == 0 {
                    continue;
                }
                let dm = partial(term, k, &powers, stride);
                for i in 0..d {
                    jac[(i, k)] += self.coefficients[(row, i)] * dm;
                }
            }
        }
    }
}

/// ∂/∂x_k of the monomial `term`, given its power table.
#[inline]
fn partial(term: &[u32], k: usize, powers: &[f64], stride: usize) -> f64 {
    let mut acc = f64::from(term[k]);
    for (i, &e) in term.iter().enumerate() {
        let e = if i == k { e - 1 } else { e };
        acc *= powers[i * stride + e as usize];
    }
    acc
}

fn active_rows(coefficients: &DMatrix<f64>) -> Vec<usize> {
    (0..coefficients.nrows())
        .filter(|&r| coefficients.row(r).iter().any(|c| *c != 0.0))
        .collect()
}

fn check_state(system: &PolynomialSystem, state: &[f64]) -> Result<()> {
    if state.len() != system.dimension() {
        return Err(Error::Evaluation(format!(
            "state has length {}, system dimension is {}",
            state.len(),
            system.dimension()
        )));
    }
    if state.iter().any(|x| !x.is_finite()) {
        return Err(Error::Evaluation("state is not finite".into()));
    }
    Ok(())
}

/// `f(state) = Θ(state) Ξ`.
pub fn rhs_eval(system: &PolynomialSystem, state: &[f64]) -> Result<Vec<f64>> {
    check_state(system, state)?;
    let mut out = vec![0.0; system.dimension()];
    system.rhs_into(state, &mut out);
    Ok(out)
}

/// Analytic Jacobian, entry (i, j) = ∂f_i/∂x_j.
pub fn jacobian_eval(system: &PolynomialSystem, state: &[f64]) -> Result<DMatrix<f64>> {
    check_state(system, state)?;
    let d = system.dimension();
    let mut jac = DMatrix::zeros(d, d);
    system.jacobian_into(state, &mut jac);
    Ok(jac)
}
