mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::DMatrix;
use sindybench_core::optimizers::{fit, FitResult, OptimizerConfig, OptimizerKind};
use sindybench_core::selection::{
    aic_c, fit_ensemble, hyperparameter_grid, pareto_scan, subsample_rows, Hyperparameter,
};

use common::{clean_problems, random_problem, raw_problem};

/// Problem whose row `i` carries the value `i` in its single feature.
fn indexed_problem(n: usize) -> sindybench_core::features::RegressionProblem {
    let theta = DMatrix::from_fn(n, 1, |i, _| i as f64);
    raw_problem(theta.clone(), theta)
}

fn row_ids(p: &sindybench_core::features::RegressionProblem) -> Vec<usize> {
    p.features().column(0).iter().map(|&v| v as usize).collect()
}

#[test]
fn subsample_half_has_distinct_rows() {
    let sub = subsample_rows(&indexed_problem(1000), 0.5, 3).unwrap();
    let ids = row_ids(&sub);
    assert_eq!(ids.len(), 500);
    assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), 500);
}

#[test]
fn subsample_full_keeps_every_row_once() {
    let mut ids = row_ids(&subsample_rows(&indexed_problem(200), 1.0, 9).unwrap());
    ids.sort_unstable();
    assert_eq!(ids, (0..200).collect::<Vec<_>>());
}

#[test]
fn subsample_is_seeded() {
    let p = indexed_problem(300);
    let a = row_ids(&subsample_rows(&p, 0.3, 5).unwrap());
    assert_eq!(a, row_ids(&subsample_rows(&p, 0.3, 5).unwrap()));
    assert_ne!(a, row_ids(&subsample_rows(&p, 0.3, 6).unwrap()));
}

#[test]
fn subsample_rejects_bad_arguments() {
    let p = random_problem(20, 8, 1, 1);
    assert!(subsample_rows(&p, 0.3, 0).is_err());
    assert!(subsample_rows(&p, 0.0, 0).is_err());
    assert!(subsample_rows(&p, 1.5, 0).is_err());
    assert!(subsample_rows(&p, 0.4, 0).is_ok());
}

#[test]
fn ensemble_has_requested_members() {
    let p = random_problem(200, 10, 2, 4);
    let e = fit_ensemble(&p, &OptimizerConfig::stlsq(0.2), 10, 0.5, 1).unwrap();
    assert_eq!(e.members.len(), 10);
    assert_eq!(e.member_seeds.len(), 10);
    assert!(e.failures.is_empty());
    assert_eq!(e.member_seeds.iter().collect::<BTreeSet<_>>().len(), 10);
    assert_eq!(e.hyperparameter, Hyperparameter::Threshold(0.2));
}

#[test]
fn single_full_member_equals_direct_fit() {
    let p = random_problem(150, 12, 3, 8);
    for cfg in [OptimizerConfig::stlsq(0.3), OptimizerConfig::lasso(2.0), OptimizerConfig::sr3(0.05, 1.0)] {
        let e = fit_ensemble(&p, &cfg, 1, 1.0, 77).unwrap();
        let direct = fit(&p, &cfg).unwrap();
        assert_eq!(e.members[0].coefficients, direct.coefficients);
    }
}

#[test]
fn failing_members_are_recorded_without_aborting() {
    let p = random_problem(100, 6, 2, 2);
    // one budget for two targets: every member fails validation
    let e = fit_ensemble(&p, &OptimizerConfig::miosr(vec![2]), 4, 0.5, 0).unwrap();
    assert!(e.members.is_empty());
    assert_eq!(e.failures.len(), 4);
    assert_eq!(e.n_models(), 4);
}

#[test]
fn lorenz_ensemble_spread_is_small() {
    let (_, train, _) = clean_problems("Lorenz63");
    let e = fit_ensemble(&train, &OptimizerConfig::stlsq(0.5), 10, 0.5, 2024).unwrap();
    let mean = e.mean_coefficients().unwrap();
    for m in &e.members {
        let spread = (&m.coefficients - &mean).norm() / mean.norm();
        assert!(spread < 1e-3, "member spread {spread}");
    }
}

#[test]
fn exact_model_has_lowest_aic() {
    let (sys, _, test) = clean_problems("Lorenz63");
    let as_fit = |c: &DMatrix<f64>| {
        let support = (0..c.ncols())
            .map(|j| (0..c.nrows()).filter(|&k| c[(k, j)] != 0.0).collect())
            .collect();
        FitResult {
            coefficients: c.clone(),
            support,
            iterations: vec![1; 3],
            proved_optimal: vec![true; 3],
            converged: vec![true; 3],
            rank_deficient: vec![false; 3],
            runtime_seconds: 0.0,
        }
    };
    let exact = aic_c(&as_fit(sys.coefficients()), &test);
    let mut perturbed = sys.coefficients().clone();
    perturbed[(1, 0)] *= 1.0 + 1e-6;
    let near = aic_c(&as_fit(&perturbed), &test);
    assert!(exact < -1e5, "exact AIC {exact}");
    assert!(exact < near);
}

#[test]
fn grid_contracts() {
    let (_, train, _) = clean_problems("Lorenz63");
    let value = |h: &Hyperparameter| match h {
        Hyperparameter::Threshold(v) | Hyperparameter::Alpha(v) => *v,
        Hyperparameter::Budget(_) => unreachable!(),
    };
    let g = hyperparameter_grid(OptimizerKind::Stlsq, 300, &train).unwrap();
    assert_eq!(g.len(), 300);
    assert!(g.windows(2).all(|w| value(&w[0]) < value(&w[1])));
    let l = hyperparameter_grid(OptimizerKind::Lasso, 50, &train).unwrap();
    assert!(value(&l[49]) / value(&l[0]) >= 1e6 * (1.0 - 1e-12));
    let m = hyperparameter_grid(OptimizerKind::Miosr, 300, &train).unwrap();
    assert_eq!(m.len(), 10);
    assert_eq!(m[0], Hyperparameter::Budget(vec![1, 1, 1]));
    let small = random_problem(30, 4, 1, 0);
    assert_eq!(hyperparameter_grid(OptimizerKind::Miosr, 1, &small).unwrap().len(), 4);
}

#[test]
fn lorenz_stlsq_scan_selects_accurate_sparse_model() {
    let (sys, train, test) = clean_problems("Lorenz63");
    let grid = hyperparameter_grid(OptimizerKind::Stlsq, 300, &train).unwrap();
    let start = Instant::now();
    let scan = pareto_scan(&train, &test, &sys, &OptimizerConfig::stlsq(0.0), &grid, 10, 0.5, 42).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(scan.records.len(), 300);
    let best = scan.best();
    assert!(best.mean_e_coef < 0.01, "E_coef {}", best.mean_e_coef);
    assert!(best.mean_e_rmse < 0.10, "E_RMSE {}", best.mean_e_rmse);
    assert!(elapsed <= 60.0, "scan took {elapsed} s");
    assert!(scan.records.iter().all(|r| r.mean_aic >= best.mean_aic || !r.valid));
    for m in &scan.best_ensemble.members {
        assert_eq!(m.nonzero_count(), 7);
    }
    // scan scores agree with the direct definitions
    let n = scan.best_ensemble.members.len() as f64;
    let direct_aic: f64 = scan.best_ensemble.members.iter().map(|m| aic_c(m, &test)).sum::<f64>() / n;
    let direct_rmse: f64 = scan
        .best_ensemble
        .members
        .iter()
        .map(|m| sindybench_core::metrics::rmse_error(test.targets(), &test.predict(&m.coefficients)).unwrap())
        .sum::<f64>()
        / n;
    assert!((direct_aic - best.mean_aic).abs() < 1e-8 * direct_aic.abs());
    assert!((direct_rmse - best.mean_e_rmse).abs() < 1e-8 * direct_rmse);
    let errs: Vec<f64> = scan
        .best_ensemble
        .members
        .iter()
        .map(|m| sindybench_core::metrics::coefficient_error(sys.coefficients(), &m.coefficients).unwrap())
        .collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / errs.len() as f64).sqrt();
    assert!(sd / mean < 0.1, "coefficient of variation {}", sd / mean);
}

#[test]
fn single_point_grid_selects_it() {
    let (sys, train, test) = clean_problems("Lorenz63");
    let grid = [Hyperparameter::Threshold(0.3)];
    let scan = pareto_scan(&train, &test, &sys, &OptimizerConfig::stlsq(0.0), &grid, 3, 0.5, 0).unwrap();
    assert_eq!(scan.best_index, 0);
    assert_eq!(scan.best_ensemble.members.len(), 3);
}

#[test]
fn scan_is_independent_of_thread_count() {
    let (sys, train, test) = clean_problems("Lorenz63");
    let grid = hyperparameter_grid(OptimizerKind::Lasso, 20, &train).unwrap();
    let cfg = OptimizerConfig::lasso(0.0);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| pareto_scan(&train, &test, &sys, &cfg, &grid, 4, 0.5, 11).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.records, b.records);
    assert_eq!(a.best_index, b.best_index);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    a.write_csv(&mut csv_a).unwrap();
    b.write_csv(&mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("hyperparameter,mean_aic,mean_e_coef,mean_e_rmse,mean_k,valid\n"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn scan_rejects_mismatched_truth() {
    let (_, train, test) = clean_problems("Lorenz63");
    let other = sindybench_core::systems::builtin_system("LorenzStenflo")
        .or_else(|| sindybench_core::systems::builtin_registry().into_iter().find(|s| s.dimension() == 4))
        .unwrap();
    let grid = [Hyperparameter::Threshold(0.3)];
    assert!(pareto_scan(&train, &test, &other, &OptimizerConfig::stlsq(0.0), &grid, 2, 0.5, 0).is_err());
    assert!(pareto_scan(&train, &test, &other, &OptimizerConfig::stlsq(0.0), &[], 2, 0.5, 0).is_err());
}
