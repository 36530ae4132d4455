use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use sindybench::config::{BenchmarkConfig, OptimizerChoice};
use sindybench::report::{read_report, write_reports, BenchmarkReport};
use sindybench::run::{run_benchmark_with, scan, simulate_system, training_problems, RunOptions};
use sindybench::plots::render_plots;
use sindybench_core::derive_seed;
use sindybench_core::features::assemble_weak;
use sindybench_core::metrics::{coefficient_error, rmse_error};
use sindybench_core::simulate::{add_noise, sample_trajectory, save_trajectory_csv, write_trajectory_csv, NoiseSpec};
use sindybench_core::systems::{builtin_registry, builtin_system, MonomialBasis, PolynomialSystem};
use sindybench_core::{Error, Result};

#[derive(Parser)]
#[command(name = "sindybench", version, about = "Sparse regression benchmark on polynomial chaotic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in systems.
    ListSystems,
    /// Sample one trajectory of a built-in system as CSV.
    Simulate {
        system: String,
        /// Noise level in percent of the trajectory rms.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reference initial condition index.
        #[arg(long, default_value_t = 0)]
        ic: usize,
        #[arg(long, default_value_t = 10)]
        periods: usize,
        #[arg(long, default_value_t = 100)]
        points_per_period: usize,
    },
    /// Pareto scan of one optimizer on one system, printing the selected model.
    Fit {
        system: String,
        #[arg(long, value_parser = parse_optimizer)]
        optimizer: OptimizerChoice,
        /// Fit the weak-form problem.
        #[arg(long)]
        weak: bool,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a benchmark described by a TOML file.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Skip the SVG figures.
        #[arg(long)]
        no_plots: bool,
    },
    /// Recompute summary, correlations and figures from a results directory.
    Analyze {
        #[arg(long)]
        report: PathBuf,
    },
}

fn parse_optimizer(s: &str) -> std::result::Result<OptimizerChoice, String> {
    OptimizerChoice::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = OptimizerChoice::ALL.iter().map(|o| o.name()).collect();
        format!("unknown optimizer \"{s}\", expected one of {}", names.join(", "))
    })
}

fn lookup(name: &str) -> Result<PolynomialSystem> {
    builtin_system(name).ok_or_else(|| Error::Config(format!("unknown system \"{name}\"; see list-systems")))
}

fn list_systems() {
    println!("{:<16} {:>3} {:>6} {:>9}  reference", "name", "dim", "terms", "period");
    for s in builtin_registry() {
        println!(
            "{:<16} {:>3} {:>6} {:>9.4}  {}",
            s.name(),
            s.dimension(),
            s.nonzero_count(),
            s.dominant_period(),
            s.citation()
        );
    }
}

fn simulate(
    system: &str,
    noise: f64,
    seed: u64,
    out: Option<PathBuf>,
    ic: usize,
    periods: usize,
    points_per_period: usize,
) -> Result<()> {
    let sys = lookup(system)?;
    let mut traj = sample_trajectory(&sys, ic, periods, points_per_period, 0)?;
    if noise > 0.0 {
        traj = add_noise(&traj, &NoiseSpec::new(noise, seed)?);
    }
    match out {
        Some(path) => save_trajectory_csv(&traj, path),
        None => write_trajectory_csv(&traj, std::io::stdout().lock()),
    }
}

/// `dx1/dt = -10 x1 + 10 x2` style rendering of a coefficient matrix.
fn equations(basis: &MonomialBasis, coef: &DMatrix<f64>) -> Vec<String> {
    (0..coef.ncols())
        .map(|j| {
            let terms: Vec<String> = (0..coef.nrows())
                .filter(|&i| coef[(i, j)] != 0.0)
                .map(|i| format!("{:+.5} {}", coef[(i, j)], basis.term_name(i)))
                .collect();
            let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" ") };
            format!("dx{}/dt = {rhs}", j + 1)
        })
        .collect()
}

fn fit(system: &str, optimizer: OptimizerChoice, weak: bool, noise: f64, seed: u64) -> Result<()> {
    let sys = lookup(system)?;
    let cfg = BenchmarkConfig {
        master_seed: seed,
        noise_percents: vec![noise],
        ..BenchmarkConfig::default()
    };
    cfg.validate()?;
    let data = simulate_system(&cfg, &sys)?;
    let problems = training_problems(&cfg, &data, noise, &[optimizer])?;
    let train = if weak && !optimizer.is_weak() {
        let weak_cfg = sindybench_core::features::WeakConfig {
            seed: derive_seed!(cfg.master_seed, sys.name(), "weak"),
            ..cfg.weak
        };
        assemble_weak(&problems.noisy, sys.basis(), &weak_cfg)?
    } else if optimizer.is_weak() {
        problems.weak.expect("weak problem assembled for a weak optimizer")
    } else {
        problems.pointwise.expect("pointwise problem assembled for a pointwise optimizer")
    };
    let result = scan(&cfg, &data, &train, optimizer, noise)?;
    let best = result.best();
    let mean = result
        .best_ensemble
        .mean_coefficients()
        .ok_or_else(|| Error::Evaluation("every ensemble member failed".into()))?;
    let form = if weak || optimizer.is_weak() { "weak" } else { "pointwise" };
    println!("system {} | {optimizer} ({form}) | noise {noise}%", sys.name());
    println!("selected hyperparameter {} (mean AIC-c {:.4})", best.hyperparameter, best.mean_aic);
    println!(
        "ensemble mean model: E_coef {:.4e}, E_RMSE {:.4e}, {} terms",
        coefficient_error(sys.coefficients(), &mean)?,
        rmse_error(data.test.targets(), &data.test.predict(&mean))?,
        mean.iter().filter(|v| **v != 0.0).count()
    );
    for line in equations(sys.basis(), &mean) {
        println!("  {line}");
    }
    Ok(())
}

fn write_all(report: &BenchmarkReport, dir: &std::path::Path, plots: bool) -> Result<()> {
    write_reports(report, dir)?;
    if plots && !report.rows.is_empty() {
        render_plots(report, &dir.join("plots"))?;
    }
    Ok(())
}

fn print_summary(report: &BenchmarkReport) {
    println!("{:<24} {:>12} {:>12} {:>12} {:>12}", "optimizer/noise", "mean E_coef", "med E_coef", "mean E_RMSE", "med E_RMSE");
    let show = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
    for o in &report.optimizers {
        for &n in &report.noise_percents {
            let key = sindybench::report::summary_key(*o, n);
            if let Some(e) = report.summary.get(&key) {
                println!(
                    "{key:<24} {:>12} {:>12} {:>12} {:>12}",
                    show(e.mean_e_coef),
                    show(e.median_e_coef),
                    show(e.mean_e_rmse),
                    show(e.median_e_rmse)
                );
            }
        }
    }
}

fn benchmark(config: PathBuf, output_dir: Option<PathBuf>, no_plots: bool) -> Result<bool> {
    let mut cfg = BenchmarkConfig::load(&config)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let opts = RunOptions::from_env()?;
    let report = run_benchmark_with(&cfg, &opts, |line| {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "{line}");
    })?;
    write_all(&report, &cfg.output_dir, !no_plots)?;
    print_summary(&report);
    println!("results written to {}", cfg.output_dir.display());
    for f in &report.failures {
        eprintln!(
            "failure: {} {} {}: {}",
            f.system,
            f.optimizer.map(|o| o.name()).unwrap_or("-"),
            f.noise_percent.map(|n| format!("{n}%")).unwrap_or_else(|| "-".into()),
            f.message
        );
    }
    Ok(report.has_failures())
}

fn analyze(dir: PathBuf) -> Result<bool> {
    let report = read_report(&dir)?;
    write_all(&report, &dir, true)?;
    print_summary(&report);
    Ok(report.has_failures())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::ListSystems => {
            list_systems();
            Ok(false)
        }
        Command::Simulate {
            system,
            noise,
            seed,
            out,
            ic,
            periods,
            points_per_period,
        } => simulate(&system, noise, seed, out, ic, periods, points_per_period).map(|_| false),
        Command::Fit {
            system,
            optimizer,
            weak,
            noise,
            seed,
        } => fit(&system, optimizer, weak, noise, seed).map(|_| false),
        Command::Benchmark {
            config,
            output_dir,
            no_plots,
        } => benchmark(config, output_dir, no_plots),
        Command::Analyze { report } => analyze(report),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("completed with failures");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
