#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use sindybench_core::features::{ProblemForm, RegressionProblem};
use sindybench_core::seed;

/// Gaussian design and targets from a sparse model plus noise.
pub fn random_problem(n: usize, p: usize, d: usize, seed: u64) -> RegressionProblem {
    let mut rng = seed::rng(seed);
    let theta = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut xi = DMatrix::zeros(p, d);
    for j in 0..d {
        for _ in 0..3 {
            let k = rng.random_range(0..p);
            xi[(k, j)] = rng.random_range(0.5..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        }
    }
    let noise = DMatrix::from_fn(n, d, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
    let y = &theta * xi + noise;
    raw_problem(theta, y)
}

/// Wraps arbitrary matrices in a problem over a matching dummy basis.
pub fn raw_problem(theta: DMatrix<f64>, y: DMatrix<f64>) -> RegressionProblem {
    RegressionProblem::unstructured(theta, y, ProblemForm::Pointwise).unwrap()
}

pub fn least_squares(prob: &RegressionProblem) -> DMatrix<f64> {
    prob.features()
        .clone()
        .svd(true, true)
        .solve(prob.targets(), 1e-14)
        .unwrap()
}

pub fn rss(prob: &RegressionProblem, xi: &DMatrix<f64>, j: usize) -> f64 {
    (prob.features() * xi.column(j) - prob.targets().column(j)).norm_squared()
}

/// Clean pointwise train (ICs 0..5) and exact test (ICs 5..10) problems
/// with 10 periods at 100 points per period.
pub fn clean_problems(
    name: &str,
) -> (
    sindybench_core::systems::PolynomialSystem,
    RegressionProblem,
    RegressionProblem,
) {
    use sindybench_core::features::{assemble_exact, assemble_pointwise};
    use sindybench_core::simulate::sample_trajectory;
    let sys = sindybench_core::systems::builtin_system(name).unwrap();
    let traj = |i| sample_trajectory(&sys, i, 10, 100, 0).unwrap();
    let train: Vec<_> = (0..5).map(traj).collect();
    let test: Vec<_> = (5..10).map(traj).collect();
    let train = assemble_pointwise(&train, sys.basis()).unwrap();
    let test = assemble_exact(&test, &sys).unwrap();
    (sys, train, test)
}
