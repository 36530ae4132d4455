use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{monomial_basis, PolynomialSystem};
use crate::error::{Error, Result};

/// On-disk JSON layout of a system definition. Coefficient rows follow the
/// graded order of [`super::MonomialBasis`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub name: String,
    pub dimension: usize,
    pub max_degree: u32,
    pub coefficients: Vec<Vec<f64>>,
    pub reference_ics: Vec<Vec<f64>>,
    pub dominant_period: f64,
    #[serde(default)]
    pub citation: String,
}

impl From<&PolynomialSystem> for SystemFile {
    fn from(s: &PolynomialSystem) -> Self {
        let xi = s.coefficients();
        SystemFile {
            name: s.name().to_string(),
            dimension: s.dimension(),
            max_degree: s.basis().max_degree(),
            coefficients: (0..xi.nrows())
                .map(|r| xi.row(r).iter().copied().collect())
                .collect(),
            reference_ics: s.reference_ics().to_vec(),
            dominant_period: s.dominant_period(),
            citation: s.citation().to_string(),
        }
    }
}

impl TryFrom<SystemFile> for PolynomialSystem {
    type Error = Error;

    fn try_from(f: SystemFile) -> Result<Self> {
        let basis = monomial_basis(f.dimension, f.max_degree)
            .map_err(|e| Error::parse("dimension", e.to_string()))?;
        if f.coefficients.len() != basis.len() {
            return Err(Error::parse(
                "coefficients",
                format!(
                    "expected {} coefficient rows for dimension {} and degree {}, found {}",
                    basis.len(),
                    f.dimension,
                    f.max_degree,
                    f.coefficients.len()
                ),
            ));
        }
        if let Some((i, row)) = f
            .coefficients
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != f.dimension)
        {
            return Err(Error::parse(
                "coefficients",
                format!("row {i} has {} entries, expected {}", row.len(), f.dimension),
            ));
        }
        let xi = DMatrix::from_fn(basis.len(), f.dimension, |r, c| f.coefficients[r][c]);
        PolynomialSystem::new(
            f.name,
            basis,
            xi,
            f.reference_ics,
            f.dominant_period,
            f.citation,
        )
    }
}

pub fn system_from_json(text: &str) -> Result<PolynomialSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| {
        // serde reports missing keys as "missing field `x`"; keep that wording
        Error::parse("document", e.to_string())
    })?;
    file.try_into()
}

pub fn system_to_json(system: &PolynomialSystem) -> String {
    serde_json::to_string_pretty(&SystemFile::from(system)).expect("plain data serializes")
}

/// Reads a system definition from a JSON file.
pub fn load_system(path: impl AsRef<Path>) -> Result<PolynomialSystem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    system_from_json(&text)
}

pub fn save_system(system: &PolynomialSystem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, system_to_json(system)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{builtin_registry, builtin_system};

    #[test]
    fn registry_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        for sys in builtin_registry() {
            let path = dir.path().join(format!("{}.json", sys.name()));
            save_system(&sys, &path).unwrap();
            let back = load_system(&path).unwrap();
            assert_eq!(back, sys);
            // bit-exact coefficients
            for (a, b) in back.coefficients().iter().zip(sys.coefficients().iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn wrong_row_count_is_named() {
        let mut f = SystemFile::from(&builtin_system("Lorenz63").unwrap());
        f.coefficients.pop();
        assert_eq!(f.coefficients.len(), 34);
        let err = PolynomialSystem::try_from(f).unwrap_err();
        match err {
            Error::Parse { field, message } => {
                assert_eq!(field, "coefficients");
                assert!(message.contains("coefficient rows"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_ics_are_named() {
        let mut f = SystemFile::from(&builtin_system("Lorenz63").unwrap());
        f.reference_ics.clear();
        let text = serde_json::to_string(&f).unwrap();
        match system_from_json(&text).unwrap_err() {
            Error::Parse { field, .. } => assert_eq!(field, "reference_ics"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_system("/definitely/not/here.json").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
