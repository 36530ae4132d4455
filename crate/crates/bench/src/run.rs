//! The benchmark protocol: simulate, corrupt, assemble, scan, score.

use std::time::Instant;

use rayon::prelude::*;
use sindybench_core::derive_seed;
use sindybench_core::features::{assemble_exact, assemble_pointwise, assemble_weak, RegressionProblem, WeakConfig};
use sindybench_core::metrics::{
    coefficient_error, description_length, largest_lyapunov, nonlinearity_score, rmse_error, scale_separation,
    stability_census, PropertyRecord,
};
use sindybench_core::optimizers::FitResult;
use sindybench_core::selection::{aic_c, hyperparameter_grid, pareto_scan, ParetoScanResult};
use sindybench_core::simulate::{add_noise, sample_trajectory, NoiseSpec, Trajectory};
use sindybench_core::systems::PolynomialSystem;
use sindybench_core::{Error, Result};

use crate::config::{BenchmarkConfig, OptimizerChoice};
use crate::report::{BenchmarkReport, DetailRow, StabilityRow, TaskFailure, TaskTiming};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SINDYBENCH_THREADS";

/// Execution settings that do not affect results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses [`THREADS_ENV`] or the rayon default.
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn from_env() -> Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got \"{v}\"")))?,
            ),
            Err(_) => None,
        };
        Ok(RunOptions { threads })
    }
}

/// Clean trajectories and the exact test problem of one system.
pub struct SystemData {
    pub system: PolynomialSystem,
    pub train_clean: Vec<Trajectory>,
    pub test: RegressionProblem,
}

/// Training problems of one system at one noise level.
pub struct TrainingProblems {
    pub noisy: Vec<Trajectory>,
    pub pointwise: Option<RegressionProblem>,
    pub weak: Option<RegressionProblem>,
}

/// Training trajectories start from reference ICs `0..n_train`, test
/// trajectories from the following `n_test`.
pub fn simulate_system(cfg: &BenchmarkConfig, system: &PolynomialSystem) -> Result<SystemData> {
    let traj = |i| sample_trajectory(system, i, cfg.periods, cfg.points_per_period, 0);
    let n_train = cfg.n_train_trajectories;
    let train_clean = (0..n_train).map(traj).collect::<Result<Vec<_>>>()?;
    let test_trajs = (n_train..n_train + cfg.n_test_trajectories).map(traj).collect::<Result<Vec<_>>>()?;
    let test = assemble_exact(&test_trajs, system)?;
    Ok(SystemData {
        system: system.clone(),
        train_clean,
        test,
    })
}

fn noise_key(noise_percent: f64) -> u64 {
    noise_percent.to_bits()
}

/// Adds noise to the training trajectories only and assembles the problems
/// the requested optimizers need.
pub fn training_problems(
    cfg: &BenchmarkConfig,
    data: &SystemData,
    noise_percent: f64,
    optimizers: &[OptimizerChoice],
) -> Result<TrainingProblems> {
    let name = data.system.name();
    let noisy = data
        .train_clean
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let seed = derive_seed!(cfg.master_seed, name, "noise", noise_key(noise_percent), i);
            Ok(add_noise(t, &NoiseSpec::new(noise_percent, seed)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let basis = data.system.basis();
    let pointwise = if optimizers.iter().any(|o| !o.is_weak()) {
        Some(assemble_pointwise(&noisy, basis)?)
    } else {
        None
    };
    let weak = if optimizers.iter().any(|o| o.is_weak()) {
        // same subdomains at every noise level
        let weak_cfg = WeakConfig {
            seed: derive_seed!(cfg.master_seed, name, "weak"),
            ..cfg.weak
        };
        Some(assemble_weak(&noisy, basis, &weak_cfg)?)
    } else {
        None
    };
    Ok(TrainingProblems { noisy, pointwise, weak })
}

/// Pareto scan of one optimizer on prepared problems.
pub fn scan_task(
    cfg: &BenchmarkConfig,
    data: &SystemData,
    problems: &TrainingProblems,
    optimizer: OptimizerChoice,
    noise_percent: f64,
) -> Result<ParetoScanResult> {
    let train = if optimizer.is_weak() { &problems.weak } else { &problems.pointwise };
    let train = train
        .as_ref()
        .ok_or_else(|| Error::Evaluation(format!("no training problem assembled for {optimizer}")))?;
    scan(cfg, data, train, optimizer, noise_percent)
}

/// Pareto scan of `optimizer`'s settings on an explicit training problem.
pub fn scan(
    cfg: &BenchmarkConfig,
    data: &SystemData,
    train: &RegressionProblem,
    optimizer: OptimizerChoice,
    noise_percent: f64,
) -> Result<ParetoScanResult> {
    let sys = &data.system;
    let grid = hyperparameter_grid(optimizer.kind(), cfg.grid_points, train)?;
    let seed = derive_seed!(cfg.master_seed, sys.name(), optimizer.name(), noise_key(noise_percent));
    pareto_scan(
        train,
        &data.test,
        sys,
        &optimizer.template(sys.dimension()),
        &grid,
        cfg.n_models,
        cfg.subsample_fraction,
        seed,
    )
}

/// Dynamical and syntactic properties of a true system.
pub fn system_properties(cfg: &BenchmarkConfig, data: &SystemData) -> Result<PropertyRecord> {
    let sys = &data.system;
    let period = sys.dominant_period();
    let p = &cfg.properties;
    let lyapunov_max = largest_lyapunov(
        sys,
        p.lyapunov_periods as f64 * period,
        p.renorm_periods * period,
        derive_seed!(cfg.master_seed, sys.name(), "lyapunov"),
    )?;
    let separation = scale_separation(
        &data.train_clean[0],
        p.n_surrogates,
        p.significance,
        derive_seed!(cfg.master_seed, sys.name(), "surrogates"),
    )?;
    Ok(PropertyRecord {
        lyapunov_max,
        scale_separation: separation.ratio,
        description_length: description_length(sys.coefficients()),
        nonlinearity_score: nonlinearity_score(sys)?,
    })
}

fn member_row(
    cfg: &BenchmarkConfig,
    data: &SystemData,
    fit: &FitResult,
) -> Result<(f64, f64, usize, f64, Option<f64>, bool)> {
    let e_coef = coefficient_error(data.system.coefficients(), &fit.coefficients)?;
    let e_rmse = rmse_error(data.test.targets(), &data.test.predict(&fit.coefficients))?;
    let runtime = cfg.record_runtimes.then_some(fit.runtime_seconds);
    Ok((
        e_coef,
        e_rmse,
        fit.nonzero_count(),
        aic_c(fit, &data.test),
        runtime,
        fit.proved_optimal.iter().all(|&p| p),
    ))
}

struct TaskOutcome {
    rows: Vec<DetailRow>,
    stability: Option<StabilityRow>,
    timing: Option<TaskTiming>,
    failures: Vec<TaskFailure>,
}

fn invalid_rows(cfg: &BenchmarkConfig, system: &str, optimizer: OptimizerChoice, noise_percent: f64) -> Vec<DetailRow> {
    (0..cfg.n_models)
        .map(|member| DetailRow::invalid(system, optimizer, noise_percent, "", member))
        .collect()
}

fn run_task(
    cfg: &BenchmarkConfig,
    data: &SystemData,
    problems: &TrainingProblems,
    optimizer: OptimizerChoice,
    noise_percent: f64,
) -> TaskOutcome {
    let name = data.system.name();
    let failure = |message: String| TaskFailure {
        system: name.to_string(),
        optimizer: Some(optimizer),
        noise_percent: Some(noise_percent),
        message,
    };
    let started = Instant::now();
    let scan = match scan_task(cfg, data, problems, optimizer, noise_percent) {
        Ok(s) => s,
        Err(e) => {
            return TaskOutcome {
                rows: invalid_rows(cfg, name, optimizer, noise_percent),
                stability: None,
                timing: None,
                failures: vec![failure(e.to_string())],
            }
        }
    };
    let seconds = started.elapsed().as_secs_f64();
    let ensemble = &scan.best_ensemble;
    let hyper = ensemble.hyperparameter.to_string();
    let mut failures: Vec<TaskFailure> = ensemble
        .failures
        .iter()
        .map(|f| failure(format!("member {}: {}", f.index, f.message)))
        .collect();
    let mut fits = ensemble.members.iter();
    let mut rows = Vec::with_capacity(cfg.n_models);
    for member in 0..cfg.n_models {
        if ensemble.failures.iter().any(|f| f.index == member) {
            rows.push(DetailRow::invalid(name, optimizer, noise_percent, &hyper, member));
            continue;
        }
        let Some(fit) = fits.next() else {
            rows.push(DetailRow::invalid(name, optimizer, noise_percent, &hyper, member));
            continue;
        };
        match member_row(cfg, data, fit) {
            Ok((e_coef, e_rmse, k, aic, runtime_s, proved_optimal)) => rows.push(DetailRow {
                system: name.to_string(),
                optimizer,
                noise_percent,
                hyperparameter: hyper.clone(),
                member,
                e_coef,
                e_rmse,
                k,
                aic,
                runtime_s,
                proved_optimal,
                valid: e_coef.is_finite() && e_rmse.is_finite(),
            }),
            Err(e) => {
                failures.push(failure(format!("member {member}: {e}")));
                rows.push(DetailRow::invalid(name, optimizer, noise_percent, &hyper, member));
            }
        }
    }
    let stability = cfg.stability.as_ref().and_then(|s| {
        let mean = ensemble.mean_coefficients()?;
        let model = data.system.with_coefficients(format!("{name}/{optimizer}"), mean).ok()?;
        let seed = derive_seed!(cfg.master_seed, name, optimizer.name(), noise_key(noise_percent), "census");
        match stability_census(&model, &data.system, s.n_trials, s.perturbation, s.horizon_periods, seed) {
            Ok(c) => Some(StabilityRow {
                system: name.to_string(),
                optimizer,
                noise_percent,
                n_trials: c.n_trials,
                n_stable: c.n_stable,
            }),
            Err(e) => {
                failures.push(failure(format!("stability census: {e}")));
                None
            }
        }
    });
    TaskOutcome {
        rows,
        stability,
        timing: cfg.record_runtimes.then(|| TaskTiming {
            system: name.to_string(),
            optimizer,
            noise_percent,
            seconds,
        }),
        failures,
    }
}

/// Runs the whole protocol with settings from the environment.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    run_benchmark_with(cfg, &RunOptions::from_env()?, |_| {})
}

/// Runs the whole protocol. `progress` receives one line per finished task.
/// Results do not depend on `opts` or on scheduling.
pub fn run_benchmark_with(
    cfg: &BenchmarkConfig,
    opts: &RunOptions,
    progress: impl Fn(&str) + Sync,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(cfg, &progress))
}

fn run_in_pool(cfg: &BenchmarkConfig, progress: &(impl Fn(&str) + Sync)) -> Result<BenchmarkReport> {
    let systems = cfg.resolve_systems()?;
    let noises = &cfg.noise_percents;
    let optimizers = &cfg.optimizers;

    let prepared: Vec<(Result<SystemData>, Option<Result<PropertyRecord>>)> = systems
        .par_iter()
        .map(|sys| {
            let data = simulate_system(cfg, sys);
            let props = data.as_ref().ok().map(|d| system_properties(cfg, d));
            progress(&format!("{}: simulated", sys.name()));
            (data, props)
        })
        .collect();

    // problems[s][n]
    let problems: Vec<Vec<Result<TrainingProblems>>> = prepared
        .par_iter()
        .map(|(data, _)| {
            noises
                .par_iter()
                .map(|&noise| match data {
                    Ok(d) => training_problems(cfg, d, noise, optimizers),
                    Err(e) => Err(Error::Evaluation(format!("simulation failed: {e}"))),
                })
                .collect()
        })
        .collect();

    let mut tasks = Vec::new();
    for s in 0..systems.len() {
        for &o in optimizers {
            for n in 0..noises.len() {
                tasks.push((s, o, n));
            }
        }
    }
    let outcomes: Vec<TaskOutcome> = tasks
        .par_iter()
        .map(|&(s, optimizer, n)| {
            let name = systems[s].name();
            let noise = noises[n];
            let outcome = match (&prepared[s].0, &problems[s][n]) {
                (Ok(data), Ok(p)) => run_task(cfg, data, p, optimizer, noise),
                (Err(e), _) | (_, Err(e)) => TaskOutcome {
                    rows: invalid_rows(cfg, name, optimizer, noise),
                    stability: None,
                    timing: None,
                    failures: vec![TaskFailure {
                        system: name.to_string(),
                        optimizer: Some(optimizer),
                        noise_percent: Some(noise),
                        message: e.to_string(),
                    }],
                },
            };
            let valid: Vec<&DetailRow> = outcome.rows.iter().filter(|r| r.valid).collect();
            let mean = |f: fn(&DetailRow) -> f64| valid.iter().map(|r| f(r)).sum::<f64>() / valid.len() as f64;
            progress(&format!(
                "{name} {optimizer} {noise}%: {} valid members, mean E_coef {:.3e}, mean E_RMSE {:.3e}",
                valid.len(),
                mean(|r| r.e_coef),
                mean(|r| r.e_rmse)
            ));
            outcome
        })
        .collect();

    let mut properties = Vec::new();
    let mut failures = Vec::new();
    for (sys, (data, props)) in systems.iter().zip(&prepared) {
        if let Err(e) = data {
            failures.push(TaskFailure {
                system: sys.name().to_string(),
                optimizer: None,
                noise_percent: None,
                message: format!("simulation: {e}"),
            });
        }
        match props {
            Some(Ok(p)) => properties.push((sys.name().to_string(), *p)),
            Some(Err(e)) => failures.push(TaskFailure {
                system: sys.name().to_string(),
                optimizer: None,
                noise_percent: None,
                message: format!("properties: {e}"),
            }),
            None => {}
        }
    }
    let mut rows = Vec::new();
    let mut stability = Vec::new();
    let mut timings = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        stability.extend(o.stability);
        timings.extend(o.timing);
        failures.extend(o.failures);
    }
    Ok(BenchmarkReport::new(
        optimizers.clone(),
        noises.clone(),
        rows,
        properties,
        stability,
        timings,
        failures,
    ))
}
