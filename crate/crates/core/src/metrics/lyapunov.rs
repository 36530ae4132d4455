use rand::Rng;
use rand_distr::StandardNormal;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::seed;
use crate::simulate::dopri::Stepper;
use crate::simulate::IntegratorOptions;
use crate::systems::PolynomialSystem;

/// Fraction of `t_total` discarded as transient.
const TRANSIENT_FRACTION: f64 = 0.1;

/// Largest Lyapunov exponent by the Benettin method with default integrator
/// tolerances.
pub fn largest_lyapunov(system: &PolynomialSystem, t_total: f64, renorm_interval: f64, seed: u64) -> Result<f64> {
    largest_lyapunov_with(system, t_total, renorm_interval, seed, &IntegratorOptions::default())
}

/// Shortest accepted integration length, in dominant periods.
pub const MIN_LYAPUNOV_PERIODS: f64 = 100.0;

/// Co-integrates the state from the first reference initial condition with
/// one random unit tangent vector, renormalizing the tangent every
/// `renorm_interval`. Returns the mean log growth rate after the transient.
pub fn largest_lyapunov_with(
    system: &PolynomialSystem,
    t_total: f64,
    renorm_interval: f64,
    seed: u64,
    opts: &IntegratorOptions,
) -> Result<f64> {
    opts.validate()?;
    let period = system.dominant_period();
    if !(t_total >= MIN_LYAPUNOV_PERIODS * period * (1.0 - 1e-12)) {
        return Err(Error::argument(format!(
            "t_total = {t_total} is shorter than {MIN_LYAPUNOV_PERIODS} dominant periods ({})",
            MIN_LYAPUNOV_PERIODS * period
        )));
    }
    if !(renorm_interval > 0.0 && renorm_interval <= t_total / 10.0) {
        return Err(Error::argument(format!(
            "renorm_interval must be in (0, t_total/10], got {renorm_interval}"
        )));
    }
    let d = system.dimension();
    let mut rng = seed::rng(derive_seed!(seed, "lyapunov", system.name()));
    let mut y: Vec<f64> = system.reference_ics()[0].clone();
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n0);
    y.extend_from_slice(&v);

    let rhs = |z: &[f64], dz: &mut [f64]| {
        let (x, t) = z.split_at(d);
        let (dx, dt) = dz.split_at_mut(d);
        system.rhs_into(x, dx);
        system.jvp_into(x, t, dt);
    };
    // the tangent is renormalized well before it can trip the blow-up bound
    let opts = IntegratorOptions { max_norm: f64::INFINITY, ..*opts };
    let mut stepper = Stepper::new(rhs, 0.0, &y, opts)?;
    let n_intervals = (t_total / renorm_interval).round().max(1.0) as usize;
    let skip = (TRANSIENT_FRACTION * n_intervals as f64).ceil() as usize;
    let mut sum = 0.0;
    let mut time = 0.0;
    for i in 1..=n_intervals {
        let t_next = i as f64 * renorm_interval;
        while stepper.t < t_next {
            stepper.step(t_next)?;
        }
        let state_norm = stepper.y[..d].iter().map(|a| a * a).sum::<f64>().sqrt();
        if !state_norm.is_finite() || state_norm > 1e6 {
            return Err(Error::Divergence {
                time: stepper.t,
                reason: "state norm exceeded blow-up bound".into(),
            });
        }
        let growth = stepper.y[d..].iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(growth > 0.0 && growth.is_finite()) {
            return Err(Error::Evaluation(format!("tangent vector degenerated at t = {}", stepper.t)));
        }
        if i > skip {
            sum += growth.ln();
            time += renorm_interval;
        }
        let mut z = stepper.y.clone();
        z[d..].iter_mut().for_each(|a| *a /= growth);
        stepper.reset_state(&z);
    }
    Ok(sum / time)
}
