//! Model error metrics, stability census and dynamical properties.

mod correlation;
mod lyapunov;
mod spectral;
mod stability;

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::PolynomialSystem;

pub use correlation::{best_fit_r2, fit_family, CorrelationFit, FitFamily};
pub use lyapunov::{largest_lyapunov, largest_lyapunov_with, MIN_LYAPUNOV_PERIODS};
pub use spectral::{scale_separation, ScaleSeparation};
pub use stability::{stability_census, stability_census_from, StabilityCensus, BLOW_UP_FACTOR};

/// Coefficient quantization step of [`description_length`].
pub const DL_QUANTUM: f64 = 1e-3;

/// Normalized coefficient and derivative errors of one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelErrors {
    pub e_coef: f64,
    pub e_rmse: f64,
}

fn check_shapes(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::argument(format!(
            "{what}: shape {:?} does not match {:?}",
            b.shape(),
            a.shape()
        )));
    }
    Ok(())
}

/// `‖Ξ_true − Ξ_fit‖_F / ‖Ξ_true‖_F`.
pub fn coefficient_error(truth: &DMatrix<f64>, fit: &DMatrix<f64>) -> Result<f64> {
    check_shapes(truth, fit, "coefficient_error")?;
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::argument("coefficient_error: true coefficients are all zero"));
    }
    Ok((truth - fit).norm() / denom)
}

/// `‖Ẋ_true − Ẋ_fit‖_F / ‖Ẋ_true‖_F`.
pub fn rmse_error(dx_true: &DMatrix<f64>, dx_fit: &DMatrix<f64>) -> Result<f64> {
    check_shapes(dx_true, dx_fit, "rmse_error")?;
    let denom = dx_true.norm();
    if denom == 0.0 {
        return Err(Error::argument("rmse_error: true derivatives are all zero"));
    }
    Ok((dx_true - dx_fit).norm() / denom)
}

/// Approximate bits needed to write down a coefficient matrix: per nonzero
/// entry, an index into the `p·d` slots, a sign bit and the magnitude
/// quantized to [`DL_QUANTUM`].
pub fn description_length(coefficients: &DMatrix<f64>) -> f64 {
    let slots = (coefficients.len() as f64).log2();
    coefficients
        .iter()
        .filter(|c| **c != 0.0)
        .map(|c| slots + 1.0 + (1.0 + c.abs() / DL_QUANTUM).log2().ceil())
        .sum()
}

/// Weighted count of nonzero terms, with weight `g + 1` for a monomial of
/// total degree `g`, summed over all equations.
pub fn nonlinearity_score(system: &PolynomialSystem) -> Result<u64> {
    let basis = system.basis();
    if basis.max_degree() > 4 {
        return Err(Error::argument(format!(
            "nonlinearity score is defined up to degree 4, basis has degree {}",
            basis.max_degree()
        )));
    }
    let c = system.coefficients();
    Ok((0..c.nrows())
        .map(|k| {
            let nnz = c.row(k).iter().filter(|v| **v != 0.0).count() as u64;
            nnz * (u64::from(basis.degree_of(k)) + 1)
        })
        .sum())
}

/// Dynamical and syntactic properties of one system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropertyRecord {
    pub lyapunov_max: f64,
    pub scale_separation: f64,
    pub description_length: f64,
    pub nonlinearity_score: u64,
}

impl PropertyRecord {
    pub const NAMES: [&'static str; 4] =
        ["lyapunov_max", "scale_separation", "description_length", "nonlinearity_score"];

    /// Values in the order of [`PropertyRecord::NAMES`].
    pub fn values(&self) -> [f64; 4] {
        [
            self.lyapunov_max,
            self.scale_separation,
            self.description_length,
            self.nonlinearity_score as f64,
        ]
    }
}

/// Writes `system,lyapunov_max,scale_separation,description_length,nonlinearity_score`.
pub fn write_properties_csv<W: Write>(writer: W, records: &[(String, PropertyRecord)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Evaluation(format!("writing properties: {e}"));
    w.write_record(["system"].iter().chain(PropertyRecord::NAMES.iter())).map_err(err)?;
    for (name, r) in records {
        w.write_record([
            name.clone(),
            r.lyapunov_max.to_string(),
            r.scale_separation.to_string(),
            r.description_length.to_string(),
            r.nonlinearity_score.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Evaluation(format!("writing properties: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_metric_examples() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 3.0]);
        assert_eq!(coefficient_error(&t, &t).unwrap(), 0.0);
        assert_eq!(coefficient_error(&t, &DMatrix::zeros(2, 2)).unwrap(), 1.0);
        assert!((coefficient_error(&t, &(&t * 2.0)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rmse_error(&t, &t).unwrap(), 0.0);
        assert_eq!(rmse_error(&t, &DMatrix::zeros(2, 2)).unwrap(), 1.0);
        assert!((rmse_error(&t, &(-&t)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn error_metric_guards() {
        let z = DMatrix::zeros(2, 2);
        assert!(matches!(coefficient_error(&z, &z), Err(Error::Argument(_))));
        assert!(matches!(rmse_error(&z, &z), Err(Error::Argument(_))));
        let t = DMatrix::from_element(2, 2, 1.0);
        assert!(coefficient_error(&t, &DMatrix::zeros(3, 2)).is_err());
    }
}
