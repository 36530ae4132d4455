//! Trajectory generation: adaptive integration, uniform resampling and
//! measurement noise.

pub(crate) mod dopri;
mod trajectory;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;
use crate::systems::PolynomialSystem;

pub use dopri::IntegratorOptions;
pub(crate) use dopri::Stepper;
pub use trajectory::{load_trajectory_csv, read_trajectory_csv, save_trajectory_csv, write_trajectory_csv, Trajectory};

/// Continuous solution on `[0, t_end]` built from the accepted steps.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    dim: usize,
    t_end: f64,
    // start time of each accepted step plus the final time
    knots: Vec<f64>,
    // 5·dim interpolation coefficients per step
    coeffs: Vec<f64>,
}

impl DenseSolution {
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Times within round-off of either end are clamped onto it.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let slack = 1e-12 * self.t_end.max(1.0);
        if !(-slack..=self.t_end + slack).contains(&t) {
            return Err(Error::argument(format!(
                "t = {t} outside the solution interval [0, {}]",
                self.t_end
            )));
        }
        let t = t.clamp(0.0, self.t_end);
        let seg = self.knots.partition_point(|&k| k <= t).saturating_sub(1);
        let seg = seg.min(self.n_steps() - 1);
        let (t0, t1) = (self.knots[seg], self.knots[seg + 1]);
        let width = 5 * self.dim;
        dopri::eval_dense(
            &self.coeffs[seg * width..(seg + 1) * width],
            self.dim,
            (t - t0) / (t1 - t0),
            out,
        );
        Ok(())
    }
}

fn rhs_closure(system: &PolynomialSystem) -> impl FnMut(&[f64], &mut [f64]) + '_ {
    move |x, dx| system.rhs_into(x, dx)
}

fn check_ic(system: &PolynomialSystem, x0: &[f64]) -> Result<()> {
    if x0.len() != system.dimension() {
        return Err(Error::argument(format!(
            "initial condition has length {}, system dimension is {}",
            x0.len(),
            system.dimension()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("initial condition is not finite"));
    }
    Ok(())
}

/// Integrates from `t = 0` to `t_end` with the default blow-up bound.
pub fn integrate(
    system: &PolynomialSystem,
    x0: &[f64],
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<DenseSolution> {
    integrate_with(system, x0, t_end, &IntegratorOptions::with_tolerances(rel_tol, abs_tol))
}

pub fn integrate_with(
    system: &PolynomialSystem,
    x0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<DenseSolution> {
    opts.validate()?;
    check_ic(system, x0)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::argument(format!("t_end must be positive, got {t_end}")));
    }
    let d = system.dimension();
    let mut stepper = Stepper::new(rhs_closure(system), 0.0, x0, *opts)?;
    let mut knots = vec![0.0];
    let mut coeffs = Vec::new();
    while stepper.t < t_end {
        stepper.step(t_end)?;
        stepper.push_dense(&mut coeffs);
        knots.push(stepper.t);
    }
    Ok(DenseSolution {
        dim: d,
        t_end,
        knots,
        coeffs,
    })
}

/// Samples `periods × points_per_period` states after a burn-in, using the
/// default integrator tolerances.
pub fn sample_trajectory(
    system: &PolynomialSystem,
    ic_index: usize,
    periods: usize,
    points_per_period: usize,
    burn_in_periods: usize,
) -> Result<Trajectory> {
    sample_trajectory_with(
        system,
        ic_index,
        periods,
        points_per_period,
        burn_in_periods,
        &IntegratorOptions::default(),
    )
}

pub fn sample_trajectory_with(
    system: &PolynomialSystem,
    ic_index: usize,
    periods: usize,
    points_per_period: usize,
    burn_in_periods: usize,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let ics = system.reference_ics();
    let x0 = ics.get(ic_index).ok_or_else(|| {
        Error::argument(format!(
            "ic_index {ic_index} out of range, {} has {} reference ICs",
            system.name(),
            ics.len()
        ))
    })?;
    if periods == 0 || points_per_period == 0 {
        return Err(Error::argument("periods and points_per_period must be positive"));
    }
    let m = periods * points_per_period;
    let dt = system.dominant_period() / points_per_period as f64;
    let start = burn_in_periods as f64 * system.dominant_period();
    let times: Vec<f64> = (0..m).map(|k| start + k as f64 * dt).collect();
    let states = sample_at(system, x0, &times, opts)?;
    Trajectory::new(0.0, dt, states, system.name())
}

/// States at the given nondecreasing times (measured from `x0` at t = 0).
pub fn sample_at(
    system: &PolynomialSystem,
    x0: &[f64],
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<DMatrix<f64>> {
    opts.validate()?;
    check_ic(system, x0)?;
    let d = system.dimension();
    let mut states = DMatrix::zeros(times.len(), d);
    let Some(&t_last) = times.last() else {
        return Ok(states);
    };
    if times.windows(2).any(|w| w[1] < w[0]) || times[0] < 0.0 {
        return Err(Error::argument("sample times must be nonnegative and sorted"));
    }
    let mut stepper = Stepper::new(rhs_closure(system), 0.0, x0, *opts)?;
    let mut row = vec![0.0; d];
    let mut next = 0;
    loop {
        // every sample inside the last accepted step
        while next < times.len() && times[next] <= stepper.t {
            if times[next] == stepper.t {
                row.copy_from_slice(&stepper.y);
            } else {
                stepper.interpolate(times[next], &mut row);
            }
            for (j, v) in row.iter().enumerate() {
                states[(next, j)] = *v;
            }
            next += 1;
        }
        if next == times.len() {
            break;
        }
        stepper.step(t_last)?;
    }
    Ok(states)
}

/// Gaussian measurement noise, as a percentage of the state rms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub percent: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(percent: f64, seed: u64) -> Result<Self> {
        if !(percent >= 0.0 && percent.is_finite()) {
            return Err(Error::argument(format!("noise percent must be >= 0, got {percent}")));
        }
        Ok(NoiseSpec { percent, seed })
    }

    /// Standard deviation applied to `traj`.
    pub fn sigma(&self, traj: &Trajectory) -> f64 {
        self.percent / 100.0 * traj.rms()
    }
}

/// Adds i.i.d. N(0, σ²) noise to every entry, σ = percent/100 · rms(states).
pub fn add_noise(traj: &Trajectory, spec: &NoiseSpec) -> Trajectory {
    let mut out = traj.clone();
    if spec.percent == 0.0 {
        return out;
    }
    let sigma = spec.sigma(traj);
    let mut rng = seed::rng(spec.seed);
    let states = out.states_mut();
    // row-major draw order, independent of the matrix storage layout
    for i in 0..states.nrows() {
        for j in 0..states.ncols() {
            let z: f64 = StandardNormal.sample(&mut rng);
            states[(i, j)] += sigma * z;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{builtin_system, monomial_basis};

    fn scalar(coefs: &[f64]) -> PolynomialSystem {
        let basis = monomial_basis(1, coefs.len() as u32 - 1).unwrap();
        PolynomialSystem::new(
            "scalar",
            basis,
            DMatrix::from_column_slice(coefs.len(), 1, coefs),
            vec![vec![1.0]],
            1.0,
            "",
        )
        .unwrap()
    }

    #[test]
    fn exponential_decay() {
        let sys = scalar(&[0.0, -1.0]);
        let sol = integrate(&sys, &[1.0], 1.0, 1e-10, 1e-10).unwrap();
        let x1 = sol.eval(1.0).unwrap()[0];
        assert!((x1 - (-1.0f64).exp()).abs() < 1e-8, "{x1}");
        // dense output between steps
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let x = sol.eval(t).unwrap()[0];
            assert!((x - (-t).exp()).abs() < 1e-8, "t={t} x={x}");
        }
    }

    #[test]
    fn lorenz_tolerance_self_consistency() {
        let sys = builtin_system("Lorenz63").unwrap();
        let x0 = &sys.reference_ics()[0];
        let a = integrate(&sys, x0, 1.0, 1e-10, 1e-12).unwrap().eval(1.0).unwrap();
        let b = integrate(&sys, x0, 1.0, 1e-12, 1e-12).unwrap().eval(1.0).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-5, "{u} vs {v}");
        }
    }

    #[test]
    fn cubic_blow_up_reports_failure_time() {
        let sys = scalar(&[0.0, 0.0, 0.0, 1.0]);
        match integrate(&sys, &[10.0], 10.0, 1e-10, 1e-12) {
            Err(Error::Divergence { time, .. }) => {
                // analytic blow-up at t = 1/(2·x0²) = 0.005
                assert!(time.is_finite() && time > 0.0 && time <= 0.005 + 1e-9, "{time}");
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_tolerances_are_rejected() {
        let sys = scalar(&[0.0, -1.0]);
        assert!(integrate(&sys, &[1.0], 1.0, 0.1, 1e-12).is_err());
        assert!(integrate(&sys, &[1.0], 1.0, 0.0, 1e-12).is_err());
        assert!(integrate(&sys, &[f64::NAN], 1.0, 1e-8, 1e-12).is_err());
    }

    #[test]
    fn lorenz_paper_grid() {
        let sys = builtin_system("Lorenz63").unwrap();
        let traj = sample_trajectory(&sys, 0, 10, 100, 10).unwrap();
        assert_eq!(traj.len(), 1000);
        assert_eq!(traj.dimension(), 3);
        assert_eq!(traj.dt(), sys.dominant_period() / 100.0);
    }

    #[test]
    fn two_point_grid() {
        let sys = builtin_system("Chen").unwrap();
        let traj = sample_trajectory(&sys, 0, 1, 2, 0).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.times(), vec![0.0, sys.dominant_period() / 2.0]);
        // no burn-in: first sample is the reference IC itself
        assert_eq!(traj.state(0), sys.reference_ics()[0]);
    }

    #[test]
    fn sample_times_are_exactly_uniform() {
        let sys = builtin_system("Lorenz63").unwrap();
        let traj = sample_trajectory(&sys, 1, 2, 50, 0).unwrap();
        for (k, t) in traj.times().into_iter().enumerate() {
            assert_eq!(t, traj.t0() + k as f64 * traj.dt());
        }
    }

    #[test]
    fn distinct_ics_give_distinct_trajectories() {
        let sys = builtin_system("Lorenz63").unwrap();
        let firsts: Vec<Vec<f64>> = (0..5)
            .map(|i| sample_trajectory(&sys, i, 1, 100, 10).unwrap().state(0))
            .collect();
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(firsts[i], firsts[j]);
            }
        }
    }

    #[test]
    fn sampling_matches_dense_solution() {
        let sys = builtin_system("Lorenz63").unwrap();
        let x0 = sys.reference_ics()[0].clone();
        let opts = IntegratorOptions::default();
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.025).collect();
        let streamed = sample_at(&sys, &x0, &times, &opts).unwrap();
        let sol = integrate_with(&sys, &x0, 1.0, &opts).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let x = sol.eval(t).unwrap();
            for j in 0..3 {
                assert!((streamed[(k, j)] - x[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn halving_tolerances_changes_short_samples_little() {
        let sys = builtin_system("Lorenz63").unwrap();
        let coarse = IntegratorOptions::with_tolerances(1e-8, 1e-10);
        let fine = IntegratorOptions::with_tolerances(0.5e-8, 0.5e-10);
        let a = sample_trajectory_with(&sys, 0, 1, 100, 0, &coarse).unwrap();
        let b = sample_trajectory_with(&sys, 0, 1, 100, 0, &fine).unwrap();
        for k in 0..=50 {
            for j in 0..3 {
                let diff = (a.states()[(k, j)] - b.states()[(k, j)]).abs();
                let scale = a.states()[(k, j)].abs().max(1.0);
                assert!(diff < 10.0 * 1e-8 * scale, "k={k} diff={diff}");
            }
        }
    }

    #[test]
    fn ic_index_out_of_range() {
        let sys = builtin_system("Lorenz63").unwrap();
        let n = sys.reference_ics().len();
        assert!(matches!(
            sample_trajectory(&sys, n, 1, 10, 0),
            Err(Error::Argument(_))
        ));
    }

    fn lorenz_traj() -> Trajectory {
        let sys = builtin_system("Lorenz63").unwrap();
        sample_trajectory(&sys, 0, 10, 100, 1).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let traj = lorenz_traj();
        let out = add_noise(&traj, &NoiseSpec::new(0.0, 3).unwrap());
        assert_eq!(out, traj);
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let traj = lorenz_traj();
        let spec = NoiseSpec::new(1.0, 42).unwrap();
        assert_eq!(add_noise(&traj, &spec), add_noise(&traj, &spec));
        assert_ne!(add_noise(&traj, &spec), add_noise(&traj, &NoiseSpec::new(1.0, 43).unwrap()));
    }

    #[test]
    fn noise_level_matches_sigma() {
        let traj = lorenz_traj();
        assert_eq!(traj.len() * traj.dimension(), 3000);
        let spec = NoiseSpec::new(1.0, 7).unwrap();
        let sigma = spec.sigma(&traj);
        let noisy = add_noise(&traj, &spec);
        let diff = noisy.states() - traj.states();
        let n = diff.len() as f64;
        let mean = diff.sum() / n;
        let var = diff.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // sd of the sample sd is about σ/sqrt(2n) ≈ 1.3% of σ, so 5% is ~4 sd
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.05);
    }

    #[test]
    fn noise_on_concatenation_matches_per_segment_noise() {
        let traj = lorenz_traj();
        let (a, b) = traj.split_at(400).unwrap();
        let (sa, sb) = (NoiseSpec::new(1.0, 1).unwrap(), NoiseSpec::new(1.0, 2).unwrap());
        let na = add_noise(&a, &sa);
        let nb = add_noise(&b, &sb);
        // order of application does not matter
        let nb2 = add_noise(&b, &sb);
        let na2 = add_noise(&a, &sa);
        assert_eq!(na.concat(&nb).unwrap(), na2.concat(&nb2).unwrap());
    }
}
