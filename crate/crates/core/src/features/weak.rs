//! Weak formulation: each row integrates the ODE against a compactly
//! supported test function φ over one subdomain, so that
//! `∫ φ θ(x) dt · ξ ≈ −∫ φ' x dt` after integration by parts.

use nalgebra::DMatrix;
use rand::Rng;

use super::{check_dimensions, evaluate_library, ProblemForm, RegressionProblem};
use crate::error::{Error, Result};
use crate::seed;
use crate::simulate::Trajectory;
use crate::systems::MonomialBasis;

pub const MIN_SUBDOMAIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakConfig {
    pub n_subdomains: usize,
    /// Even exponent p_t of the bump φ = u^(p_t/2).
    pub test_order: u32,
    /// Subdomain length as a fraction of one trajectory's span.
    pub subdomain_fraction: f64,
    pub seed: u64,
}

impl Default for WeakConfig {
    fn default() -> Self {
        WeakConfig {
            n_subdomains: 200,
            test_order: 6,
            subdomain_fraction: 0.05,
            seed: 0,
        }
    }
}

impl WeakConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subdomains == 0 {
            return Err(Error::Config("n_subdomains must be at least 1".into()));
        }
        if self.test_order < 2 || !self.test_order.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "test_order must be an even integer >= 2, got {}",
                self.test_order
            )));
        }
        if !(self.subdomain_fraction > 0.0 && self.subdomain_fraction <= 0.5) {
            return Err(Error::Config(format!(
                "subdomain_fraction must be in (0, 0.5], got {}",
                self.subdomain_fraction
            )));
        }
        Ok(())
    }
}

/// Sample-index range `[start, end]` (inclusive) of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subdomain {
    pub trajectory: usize,
    pub start: usize,
    pub end: usize,
}

/// Seeded subdomain placement.
pub fn weak_subdomains(trajs: &[Trajectory], cfg: &WeakConfig) -> Result<Vec<Subdomain>> {
    cfg.validate()?;
    if trajs.is_empty() {
        return Err(Error::argument("at least one trajectory is required"));
    }
    let intervals: Vec<usize> = trajs
        .iter()
        .map(|t| (cfg.subdomain_fraction * (t.len() - 1) as f64).round() as usize)
        .collect();
    if let Some(short) = intervals.iter().position(|&n| n + 1 < MIN_SUBDOMAIN_POINTS) {
        return Err(Error::Config(format!(
            "subdomains in trajectory {short} hold {} samples, at least {MIN_SUBDOMAIN_POINTS} are required",
            intervals[short] + 1
        )));
    }
    let mut rng = seed::rng(crate::derive_seed!(cfg.seed, "weak-subdomains"));
    Ok((0..cfg.n_subdomains)
        .map(|_| {
            let trajectory = rng.random_range(0..trajs.len());
            let n = intervals[trajectory];
            let start = rng.random_range(0..=trajs[trajectory].len() - 1 - n);
            Subdomain {
                trajectory,
                start,
                end: start + n,
            }
        })
        .collect())
}

/// φ and φ' on the samples of one subdomain, scaled by `scale`.
fn test_function(n_points: usize, dt: f64, order: u32, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let half = (n_points - 1) as f64 * dt / 2.0;
    let q = order as i32 / 2;
    let mut phi = Vec::with_capacity(n_points);
    let mut dphi = Vec::with_capacity(n_points);
    for i in 0..n_points {
        // s = (t - center)/half in [-1, 1]; u = (t-a)(b-t)/half² = 1 - s²
        let s = (i as f64 * dt - half) / half;
        let u = 1.0 - s * s;
        let du = -2.0 * s / half;
        phi.push(scale * u.powi(q));
        dphi.push(scale * q as f64 * u.powi(q - 1) * du);
    }
    (phi, dphi)
}

fn trapezoid_weights(n_points: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![dt; n_points];
    w[0] = dt / 2.0;
    w[n_points - 1] = dt / 2.0;
    w
}

/// Builds the weak problem with one row per subdomain.
///
/// Each row is divided by ∫φ and multiplied by √(N/K), where N is the total
/// sample count and K the number of rows. Rows then average the library over
/// their subdomain and ΘᵀΘ estimates the pointwise Gram matrix, so the ridge
/// of the optimizers has the same meaning in both formulations.
pub fn assemble_weak(
    trajs: &[Trajectory],
    basis: &MonomialBasis,
    cfg: &WeakConfig,
) -> Result<RegressionProblem> {
    assemble_weak_scaled(trajs, basis, cfg, None)
}

/// `scale = None` applies the normalization of [`assemble_weak`]; `Some(c)`
/// uses `c·φ` as is.
pub(crate) fn assemble_weak_scaled(
    trajs: &[Trajectory],
    basis: &MonomialBasis,
    cfg: &WeakConfig,
    scale: Option<f64>,
) -> Result<RegressionProblem> {
    check_dimensions(trajs, basis.dimension())?;
    let domains = weak_subdomains(trajs, cfg)?;
    let libraries: Vec<DMatrix<f64>> = trajs
        .iter()
        .map(|t| evaluate_library(basis, t.states()))
        .collect::<Result<_>>()?;
    let (p, d) = (basis.len(), basis.dimension());
    let mut features = DMatrix::zeros(domains.len(), p);
    let mut targets = DMatrix::zeros(domains.len(), d);
    let n_samples: usize = trajs.iter().map(Trajectory::len).sum();
    let row_factor = (n_samples as f64 / domains.len() as f64).sqrt();
    for (row, dom) in domains.iter().enumerate() {
        let traj = &trajs[dom.trajectory];
        let n_points = dom.end - dom.start + 1;
        let w = trapezoid_weights(n_points, traj.dt());
        let c = match scale {
            Some(c) => c,
            None => {
                let (phi, _) = test_function(n_points, traj.dt(), cfg.test_order, 1.0);
                row_factor / w.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>()
            }
        };
        let (phi, dphi) = test_function(n_points, traj.dt(), cfg.test_order, c);
        let theta = &libraries[dom.trajectory];
        let x = traj.states();
        for i in 0..n_points {
            let (wf, wd) = (w[i] * phi[i], w[i] * dphi[i]);
            let r = dom.start + i;
            for k in 0..p {
                features[(row, k)] += wf * theta[(r, k)];
            }
            for j in 0..d {
                targets[(row, j)] -= wd * x[(r, j)];
            }
        }
    }
    RegressionProblem::new(features, targets, basis.clone(), ProblemForm::Weak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::monomial_basis;

    fn sine_traj(periods: usize) -> Trajectory {
        let dt = std::f64::consts::TAU / 100.0;
        let m = periods * 100;
        let states = DMatrix::from_fn(m, 1, |i, _| (i as f64 * dt).sin());
        Trajectory::new(0.0, dt, states, "sine").unwrap()
    }

    // ∫ φ(t) cos(t) dt on [a, b] with a fine composite Simpson rule
    fn analytic_rhs(a: f64, b: f64, order: u32) -> f64 {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let half = (b - a) / 2.0;
        let f = |t: f64| (((t - a) * (b - t)) / (half * half)).powi(order as i32 / 2) * t.cos();
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn weak_error(order: u32) -> f64 {
        let traj = sine_traj(10);
        let basis = monomial_basis(1, 1).unwrap();
        let cfg = WeakConfig { test_order: order, n_subdomains: 40, ..Default::default() };
        let prob = assemble_weak_scaled(&[traj.clone()], &basis, &cfg, Some(1.0)).unwrap();
        let doms = weak_subdomains(&[traj.clone()], &cfg).unwrap();
        let mut worst: f64 = 0.0;
        for (row, dom) in doms.iter().enumerate() {
            let exact = analytic_rhs(traj.time(dom.start), traj.time(dom.end), order);
            // relative to ∫φ, the natural scale of the row
            let scale = prob.features()[(row, 0)];
            worst = worst.max((prob.targets()[(row, 0)] - exact).abs() / scale);
        }
        worst
    }

    #[test]
    fn integration_by_parts_identity_on_sine() {
        let err = weak_error(WeakConfig::default().test_order);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn fourth_order_bump_is_second_order_accurate() {
        // endpoint φ'' ≠ 0 leaves an O(dt²) trapezoid error of about 1e-3
        let err = weak_error(4);
        assert!(err > 1e-4 && err < 5e-3, "{err}");
    }

    #[test]
    fn constant_trajectory_has_zero_targets() {
        let states = DMatrix::from_element(400, 3, 2.5);
        let traj = Trajectory::new(0.0, 0.01, states, "const").unwrap();
        let basis = monomial_basis(3, 2).unwrap();
        let prob = assemble_weak(&[traj], &basis, &WeakConfig::default()).unwrap();
        assert_eq!(prob.n_rows(), 200);
        assert!(prob.targets().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn row_count_equals_subdomain_count() {
        let traj = sine_traj(10);
        let basis = monomial_basis(1, 3).unwrap();
        for k in [1, 10, 200] {
            let cfg = WeakConfig { n_subdomains: k, ..Default::default() };
            let prob = assemble_weak(&[traj.clone()], &basis, &cfg).unwrap();
            assert_eq!(prob.n_rows(), k);
            assert_eq!(prob.form(), ProblemForm::Weak);
        }
    }

    #[test]
    fn scaling_phi_scales_both_sides() {
        let trajs = vec![sine_traj(10), sine_traj(5)];
        let basis = monomial_basis(1, 2).unwrap();
        let cfg = WeakConfig::default();
        let a = assemble_weak_scaled(&trajs, &basis, &cfg, Some(1.0)).unwrap();
        let b = assemble_weak_scaled(&trajs, &basis, &cfg, Some(3.0)).unwrap();
        assert!((b.features() - a.features() * 3.0).norm() < 1e-12 * b.features().norm());
        assert!((b.targets() - a.targets() * 3.0).norm() < 1e-12 * b.targets().norm());
        let solve = |p: &RegressionProblem| {
            p.features().clone().svd(true, true).solve(p.targets(), 1e-14).unwrap()
        };
        assert!((solve(&a) - solve(&b)).norm() < 1e-8);
    }

    #[test]
    fn default_rows_average_the_library() {
        let traj = sine_traj(10);
        let basis = monomial_basis(1, 2).unwrap();
        let cfg = WeakConfig { n_subdomains: 40, ..Default::default() };
        let prob = assemble_weak(&[traj.clone()], &basis, &cfg).unwrap();
        let factor = (traj.len() as f64 / 40.0).sqrt();
        for row in 0..40 {
            assert!((prob.features()[(row, 0)] - factor).abs() < 1e-12);
            assert!(prob.features()[(row, 2)] <= factor * (1.0 + 1e-12));
        }
    }

    #[test]
    fn subdomains_are_seeded_and_in_range() {
        let trajs = vec![sine_traj(10), sine_traj(10)];
        let cfg = WeakConfig { seed: 9, ..Default::default() };
        let a = weak_subdomains(&trajs, &cfg).unwrap();
        assert_eq!(a, weak_subdomains(&trajs, &cfg).unwrap());
        assert_ne!(a, weak_subdomains(&trajs, &WeakConfig { seed: 10, ..cfg }).unwrap());
        for dom in &a {
            assert_eq!(dom.end - dom.start, 50);
            assert!(dom.end < 1000);
        }
        assert!(a.iter().any(|d| d.trajectory == 0) && a.iter().any(|d| d.trajectory == 1));
    }

    #[test]
    fn short_subdomains_are_rejected() {
        let traj = sine_traj(1);
        let basis = monomial_basis(1, 1).unwrap();
        let cfg = WeakConfig { subdomain_fraction: 0.02, ..Default::default() };
        assert!(matches!(assemble_weak(&[traj], &basis, &cfg), Err(Error::Config(_))));
        assert!(WeakConfig { test_order: 3, ..Default::default() }.validate().is_err());
    }
}
