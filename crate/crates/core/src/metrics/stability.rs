use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::seed;
use crate::simulate::dopri::Stepper;
use crate::simulate::{sample_trajectory, IntegratorOptions, Trajectory};
use crate::systems::PolynomialSystem;

/// A trial is unstable once `‖x‖` exceeds this multiple of the reference norm.
pub const BLOW_UP_FACTOR: f64 = 100.0;

/// Outcome of simulating a model from perturbed attractor points.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCensus {
    pub n_trials: usize,
    pub n_stable: usize,
    /// Failure time of every unstable trial, in trial order.
    pub unstable_times: Vec<f64>,
}

impl StabilityCensus {
    pub fn n_unstable(&self) -> usize {
        self.n_trials - self.n_stable
    }
}

/// Simulates `model` from `n_trials` initial conditions near the attractor of
/// `truth` for `horizon_periods` dominant periods.
///
/// Each initial condition is a random sample of a 10-period truth trajectory
/// plus Gaussian noise with standard deviation `perturbation · rms`. The
/// reference norm for blow-up is the largest state norm of that trajectory.
pub fn stability_census(
    model: &PolynomialSystem,
    truth: &PolynomialSystem,
    n_trials: usize,
    perturbation: f64,
    horizon_periods: usize,
    seed: u64,
) -> Result<StabilityCensus> {
    let reference = sample_trajectory(truth, 0, 10, 100, 0)?;
    stability_census_from(model, &reference, truth.dominant_period(), n_trials, perturbation, horizon_periods, seed)
}

/// Census with an explicit reference trajectory, e.g. the training data.
pub fn stability_census_from(
    model: &PolynomialSystem,
    reference: &Trajectory,
    period: f64,
    n_trials: usize,
    perturbation: f64,
    horizon_periods: usize,
    seed: u64,
) -> Result<StabilityCensus> {
    if n_trials == 0 {
        return Err(Error::argument("a stability census needs at least one trial"));
    }
    if model.dimension() != reference.dimension() {
        return Err(Error::argument(format!(
            "model has dimension {}, reference trajectory {}",
            model.dimension(),
            reference.dimension()
        )));
    }
    if !(perturbation >= 0.0) || !(period > 0.0) {
        return Err(Error::argument("perturbation must be >= 0 and the period positive"));
    }
    let opts = IntegratorOptions {
        max_norm: BLOW_UP_FACTOR * reference.max_norm().max(f64::MIN_POSITIVE),
        ..IntegratorOptions::default()
    };
    let sigma = perturbation * reference.rms();
    let t_end = horizon_periods as f64 * period;
    let outcomes: Vec<Option<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(derive_seed!(seed, "census", i));
            let mut x0 = reference.state(rng.random_range(0..reference.len()));
            for v in &mut x0 {
                *v += sigma * rng.sample::<f64, _>(StandardNormal);
            }
            failure_time(model, &x0, t_end, opts)
        })
        .collect();
    let unstable_times: Vec<f64> = outcomes.into_iter().flatten().collect();
    Ok(StabilityCensus {
        n_trials,
        n_stable: n_trials - unstable_times.len(),
        unstable_times,
    })
}

/// Time at which the model leaves the blow-up ball or the step size
/// underflows, or `None` if it reaches `t_end`.
fn failure_time(model: &PolynomialSystem, x0: &[f64], t_end: f64, opts: IntegratorOptions) -> Option<f64> {
    let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > opts.max_norm {
        return Some(0.0);
    }
    let mut stepper = match Stepper::new(|x: &[f64], dx: &mut [f64]| model.rhs_into(x, dx), 0.0, x0, opts) {
        Ok(s) => s,
        Err(_) => return Some(0.0),
    };
    while stepper.t < t_end {
        if let Err(e) = stepper.step(t_end) {
            return Some(match e {
                Error::Divergence { time, .. } => time,
                _ => stepper.t,
            });
        }
    }
    None
}
