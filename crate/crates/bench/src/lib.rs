//! Benchmark harness over the built-in chaotic systems: run configuration,
//! the end-to-end protocol, CSV/JSON reports and SVG figures.

pub mod config;
pub mod plots;
pub mod report;
pub mod run;

pub use config::{BenchmarkConfig, OptimizerChoice, PropertyConfig, StabilityConfig, SystemSelection};
pub use plots::{render_plots, scatter_svg, ScatterSeries};
pub use report::{read_report, write_reports, BenchmarkReport, CorrelationRow, DetailRow, SummaryEntry};
pub use run::{run_benchmark, run_benchmark_with, RunOptions};
