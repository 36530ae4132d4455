mod common;

use std::collections::BTreeSet;

use common::{least_squares, random_problem, raw_problem, rss};
use nalgebra::DMatrix;
use sindybench_core::features::{assemble_pointwise, assemble_weak, WeakConfig};
use sindybench_core::optimizers::{
    exhaustive_best_subset, fit, lasso_cd, miosr, sr3, sr3_objective_trace, stlsq, OptimizerConfig,
};
use sindybench_core::simulate::sample_trajectory;
use sindybench_core::systems::builtin_system;
use sindybench_core::Error;

fn lorenz_problem() -> sindybench_core::features::RegressionProblem {
    let sys = builtin_system("Lorenz63").unwrap();
    let trajs: Vec<_> = (0..5).map(|i| sample_trajectory(&sys, i, 10, 100, 10).unwrap()).collect();
    assemble_pointwise(&trajs, sys.basis()).unwrap()
}

fn support_set(xi: &DMatrix<f64>) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    for j in 0..xi.ncols() {
        for k in 0..xi.nrows() {
            if xi[(k, j)] != 0.0 {
                s.insert((k, j));
            }
        }
    }
    s
}

// ---------- STLSQ ----------

#[test]
fn stlsq_single_feature() {
    let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
    let theta = DMatrix::from_column_slice(20, 1, &x);
    let y = &theta * -2.0;
    let fit = stlsq(&raw_problem(theta, y), &OptimizerConfig::stlsq(0.5)).unwrap();
    assert!((fit.coefficients[(0, 0)] + 2.0).abs() < 1e-6);
    assert_eq!(fit.support, vec![vec![0]]);
}

#[test]
fn stlsq_zero_threshold_is_ridge_least_squares() {
    let prob = random_problem(40, 6, 2, 5);
    let fit = stlsq(&prob, &OptimizerConfig::stlsq(0.0)).unwrap();
    let theta = prob.features();
    let lhs = theta.tr_mul(theta) + DMatrix::identity(6, 6) * 1e-5;
    let ridge = lhs.lu().solve(&theta.tr_mul(prob.targets())).unwrap();
    assert!((&fit.coefficients - ridge).norm() < 1e-9);
    assert!(fit.support.iter().all(|s| s.len() == 6));
}

#[test]
fn stlsq_huge_threshold_gives_zero_model() {
    let prob = random_problem(40, 6, 2, 6);
    let big = least_squares(&prob).amax() * 2.0;
    let fit = stlsq(&prob, &OptimizerConfig::stlsq(big)).unwrap();
    assert_eq!(fit.nonzero_count(), 0);
    assert!(fit.coefficients.iter().all(|&c| c == 0.0));
}

#[test]
fn stlsq_threshold_floor_holds() {
    for seed in 0..40 {
        let prob = random_problem(30, 10, 2, seed);
        let scale = least_squares(&prob).amax();
        for t in [0.01, 0.1, 0.3, 0.6, 0.9] {
            let lam = t * scale;
            let fit = stlsq(&prob, &OptimizerConfig::stlsq(lam)).unwrap();
            assert!(fit.coefficients.iter().all(|&c| c == 0.0 || c.abs() >= lam));
        }
    }
}

#[test]
fn stlsq_recovers_exact_model_on_orthogonal_library() {
    let prob = random_problem(50, 8, 1, 17);
    let q = prob.features().clone().qr().q();
    let mut xi = DMatrix::zeros(8, 2);
    xi[(1, 0)] = 2.0;
    xi[(4, 0)] = -0.8;
    xi[(0, 1)] = 1.5;
    xi[(7, 1)] = 0.6;
    let prob = raw_problem(q.clone(), &q * &xi);
    let fit = stlsq(&prob, &OptimizerConfig::stlsq(0.5)).unwrap();
    assert_eq!(support_set(&fit.coefficients), support_set(&xi));
    // default ridge only shrinks by a factor 1/(1 + 1e-5)
    assert!((&fit.coefficients - &xi).amax() < 1e-4);
    let mut exact = OptimizerConfig::stlsq(0.5);
    exact.ridge = 0.0;
    let fit = stlsq(&prob, &exact).unwrap();
    assert!((&fit.coefficients - &xi).amax() < 1e-12);
}

// ---------- Lasso ----------

#[test]
fn lasso_zero_alpha_is_least_squares() {
    let prob = random_problem(30, 6, 2, 8);
    let mut cfg = OptimizerConfig::lasso(0.0);
    cfg.convergence_tol = 1e-13;
    cfg.max_iterations = 100_000;
    let fit = lasso_cd(&prob, &cfg).unwrap();
    assert!((&fit.coefficients - least_squares(&prob)).amax() < 1e-8);
}

#[test]
fn lasso_large_alpha_gives_zero() {
    let prob = random_problem(30, 6, 1, 9);
    let alpha_max = prob.features().tr_mul(prob.targets()).amax();
    let fit = lasso_cd(&prob, &OptimizerConfig::lasso(alpha_max)).unwrap();
    assert_eq!(fit.nonzero_count(), 0);
}

pub fn assert_lasso_kkt(prob: &sindybench_core::features::RegressionProblem, alpha: f64, xi: &DMatrix<f64>) {
    let grad = prob.features().tr_mul(&(prob.features() * xi - prob.targets()));
    for j in 0..xi.ncols() {
        for k in 0..xi.nrows() {
            let g = grad[(k, j)];
            let c = xi[(k, j)];
            if c == 0.0 {
                assert!(g.abs() <= alpha + 1e-6, "zero coord {k}: |g| = {} > {alpha}", g.abs());
            } else {
                assert!((g + alpha * c.signum()).abs() <= 1e-6, "active coord {k}: g = {g}");
            }
        }
    }
}

#[test]
fn lasso_kkt_conditions_on_random_instances() {
    for seed in 0..100 {
        let prob = random_problem(20, 8, 1, 1000 + seed);
        let alpha_max = prob.features().tr_mul(prob.targets()).amax();
        let alpha = alpha_max * [0.01, 0.1, 0.5][seed as usize % 3];
        let mut cfg = OptimizerConfig::lasso(alpha);
        cfg.convergence_tol = 1e-12;
        cfg.max_iterations = 100_000;
        let fit = lasso_cd(&prob, &cfg).unwrap();
        assert!(fit.all_converged());
        assert_lasso_kkt(&prob, alpha, &fit.coefficients);
    }
}

#[test]
fn lasso_converges_on_collinear_monomial_library() {
    let prob = lorenz_problem();
    let theta = prob.features();
    let alpha_max = theta.tr_mul(prob.targets()).amax();
    for alpha in [1e-9 * alpha_max, 1e-6 * alpha_max, 1e-3 * alpha_max] {
        let fit = lasso_cd(&prob, &OptimizerConfig::lasso(alpha)).unwrap();
        assert!(fit.all_converged());
        let grad = theta.tr_mul(&(theta * &fit.coefficients - prob.targets()));
        for j in 0..grad.ncols() {
            let y_norm = prob.targets().column(j).norm();
            for k in 0..grad.nrows() {
                // KKT to a tolerance scaled by the size of Θ_kᵀy
                let tol = 1e-8 * (alpha + theta.column(k).norm() * y_norm);
                let (g, c) = (grad[(k, j)], fit.coefficients[(k, j)]);
                if c == 0.0 {
                    assert!(g.abs() <= alpha + tol);
                } else {
                    assert!((g + alpha * c.signum()).abs() <= tol, "g = {g}, alpha = {alpha}");
                }
            }
        }
    }
}

// ---------- SR3 ----------

#[test]
fn sr3_zero_lambda_is_least_squares() {
    let prob = random_problem(30, 6, 2, 10);
    let fit = sr3(&prob, &OptimizerConfig::sr3(0.0, 1.0)).unwrap();
    assert!((&fit.coefficients - least_squares(&prob)).amax() < 1e-6);
}

#[test]
fn sr3_objective_is_nonincreasing() {
    for seed in 0..100 {
        let prob = random_problem(25, 8, 1, 2000 + seed);
        let nu = if seed % 2 == 0 { 1.0 } else { 0.1 };
        let tau = least_squares(&prob).amax() * [0.05, 0.2, 0.5][seed as usize % 3];
        let cfg = OptimizerConfig::sr3_from_threshold(tau, nu);
        let trace = sr3_objective_trace(&prob, &cfg, 0).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{} > {}", w[1], w[0]);
        }
    }
}

#[test]
fn sr3_threshold_mapping() {
    let cfg = OptimizerConfig::sr3_from_threshold(0.3, 0.1);
    assert!((cfg.sr3_threshold() - 0.3).abs() < 1e-15);
    assert!((cfg.threshold - 0.45).abs() < 1e-12);
}

#[test]
fn sr3_recovers_lorenz_support_for_some_threshold() {
    let prob = lorenz_problem();
    let truth = builtin_system("Lorenz63").unwrap();
    let want = support_set(truth.coefficients());
    let found = [0.05, 0.1, 0.2, 0.5].iter().any(|&tau| {
        let fit = sr3(&prob, &OptimizerConfig::sr3_from_threshold(tau, 1.0)).unwrap();
        support_set(&fit.coefficients) == want
    });
    assert!(found);
}

// ---------- MIOSR and exhaustive search ----------

#[test]
fn miosr_full_budget_is_least_squares() {
    let prob = random_problem(30, 6, 2, 11);
    let fit = miosr(&prob, &OptimizerConfig::miosr(vec![6, 6])).unwrap();
    assert!(fit.proved_optimal.iter().all(|&b| b));
    assert!((&fit.coefficients - least_squares(&prob)).amax() < 1e-8);
}

#[test]
fn miosr_matches_exhaustive_search() {
    for seed in 0..50u64 {
        let p = 6 + (seed as usize % 7);
        let k = 1 + (seed as usize % 4);
        let prob = random_problem(3 * p, p, 1, 3000 + seed);
        let fit = miosr(&prob, &OptimizerConfig::miosr(vec![k])).unwrap();
        assert!(fit.proved_optimal[0]);
        assert!(fit.support[0].len() <= k);
        let ex = exhaustive_best_subset(&prob, k, 0).unwrap();
        let got = rss(&prob, &fit.coefficients, 0);
        assert!((got - ex.rss).abs() <= 1e-9 * ex.rss.max(1.0), "seed {seed}: {got} vs {}", ex.rss);
    }
}

#[test]
fn miosr_never_worse_than_stlsq_at_equal_sparsity() {
    for seed in 0..20 {
        let prob = random_problem(40, 10, 1, 4000 + seed);
        let scale = least_squares(&prob).amax();
        for t in [0.05, 0.2, 0.5] {
            let st = stlsq(&prob, &OptimizerConfig::stlsq(t * scale)).unwrap();
            let k = st.support[0].len();
            if k == 0 {
                continue;
            }
            let mi = miosr(&prob, &OptimizerConfig::miosr(vec![k])).unwrap();
            assert!(mi.proved_optimal[0]);
            assert!(rss(&prob, &mi.coefficients, 0) <= rss(&prob, &st.coefficients, 0) + 1e-9);
        }
    }
}

#[test]
fn miosr_recovers_lorenz() {
    let prob = lorenz_problem();
    let truth = builtin_system("Lorenz63").unwrap();
    let fit = miosr(&prob, &OptimizerConfig::miosr(vec![2, 3, 2])).unwrap();
    assert_eq!(fit.proved_optimal, vec![true; 3]);
    assert_eq!(support_set(&fit.coefficients), support_set(truth.coefficients()));
    assert!(fit.runtime_seconds < 15.0);
}

#[test]
fn miosr_budget_errors() {
    let prob = random_problem(20, 5, 1, 12);
    assert!(matches!(miosr(&prob, &OptimizerConfig::miosr(vec![6])), Err(Error::Argument(_))));
    assert!(matches!(miosr(&prob, &OptimizerConfig::miosr(vec![1, 1])), Err(Error::Argument(_))));
    let wide = random_problem(200, 40, 1, 13);
    assert!(matches!(exhaustive_best_subset(&wide, 10, 0), Err(Error::Argument(_))));
}

#[test]
fn exhaustive_orthonormal_single_feature() {
    let prob = random_problem(30, 7, 1, 14);
    let q = prob.features().clone().qr().q();
    let y = prob.targets().clone();
    let corr = q.tr_mul(&y);
    let best = (0..7)
        .max_by(|&a, &b| corr[(a, 0)].abs().partial_cmp(&corr[(b, 0)].abs()).unwrap())
        .unwrap();
    let ex = exhaustive_best_subset(&raw_problem(q, y), 1, 0).unwrap();
    assert_eq!(ex.support, vec![best]);
}

#[test]
fn exhaustive_full_size_is_least_squares() {
    let prob = random_problem(20, 5, 1, 15);
    let ex = exhaustive_best_subset(&prob, 5, 0).unwrap();
    let ls = least_squares(&prob);
    for k in 0..5 {
        assert!((ex.coefficients[k] - ls[(k, 0)]).abs() < 1e-8);
    }
}

// ---------- shared properties ----------

fn all_configs(p: usize) -> Vec<OptimizerConfig> {
    vec![
        OptimizerConfig::stlsq(0.3),
        OptimizerConfig::lasso(2.0),
        OptimizerConfig::sr3_from_threshold(0.3, 1.0),
        OptimizerConfig::miosr(vec![3.min(p); 3]),
    ]
}

#[test]
fn permuting_targets_permutes_results() {
    let prob = random_problem(40, 8, 3, 16);
    let perm = [2, 0, 1];
    let permuted = prob.select_targets(&perm).unwrap();
    for cfg in all_configs(8) {
        let a = fit(&prob, &cfg).unwrap();
        let b = fit(&permuted, &cfg).unwrap();
        for (jb, &ja) in perm.iter().enumerate() {
            assert_eq!(a.coefficients.column(ja), b.coefficients.column(jb), "{:?}", cfg.variant);
            assert_eq!(a.support[ja], b.support[jb]);
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let prob = random_problem(40, 8, 3, 17);
    for cfg in all_configs(8) {
        let mut a = fit(&prob, &cfg).unwrap();
        let mut b = fit(&prob, &cfg).unwrap();
        a.runtime_seconds = 0.0;
        b.runtime_seconds = 0.0;
        assert_eq!(a, b);
    }
}

#[test]
fn support_matches_nonzero_pattern() {
    let prob = random_problem(40, 8, 3, 18);
    for cfg in all_configs(8) {
        let r = fit(&prob, &cfg).unwrap();
        for j in 0..3 {
            let nz: Vec<usize> = (0..8).filter(|&k| r.coefficients[(k, j)] != 0.0).collect();
            assert_eq!(nz, r.support[j]);
            assert!(r.coefficients.column(j).iter().all(|c| *c == 0.0 || c.abs() >= 1e-10));
        }
    }
}

// ---------- formulations agree on clean Lorenz data ----------

#[test]
fn weak_and_pointwise_stlsq_agree_on_lorenz() {
    let sys = builtin_system("Lorenz63").unwrap();
    let trajs: Vec<_> = (0..5).map(|i| sample_trajectory(&sys, i, 10, 100, 10).unwrap()).collect();
    let pointwise = assemble_pointwise(&trajs, sys.basis()).unwrap();
    let weak = assemble_weak(&trajs, sys.basis(), &WeakConfig::default()).unwrap();
    let cfg = OptimizerConfig::stlsq(0.5);
    let a = stlsq(&pointwise, &cfg).unwrap();
    let b = stlsq(&weak, &cfg).unwrap();
    let want = support_set(sys.coefficients());
    assert_eq!(support_set(&a.coefficients), want);
    assert_eq!(support_set(&b.coefficients), want, "{}", b.coefficients);
}
