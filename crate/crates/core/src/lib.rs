//! Sparse identification of polynomial ODEs from trajectory data, with the
//! model-selection and error-analysis machinery of a benchmark harness.
//!
//! Module map:
//! - [`systems`]: monomial bases, polynomial ODEs, built-in chaotic systems
//! - [`simulate`]: adaptive integration, sampling and measurement noise
//! - [`features`]: feature libraries, derivatives, weak formulation
//! - [`optimizers`]: STLSQ, Lasso, SR3 and exact best-subset regression
//! - [`selection`]: subsampled ensembles, AIC-c and hyperparameter scans
//! - [`metrics`]: error metrics, stability and dynamical properties

pub mod error;
pub mod features;
pub mod metrics;
pub mod optimizers;
pub mod selection;
pub mod seed;
pub mod simulate;
pub mod systems;

pub use error::{Error, Result};
