//! Benchmark results and their CSV/JSON artifacts.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sindybench_core::metrics::{best_fit_r2, write_properties_csv, CorrelationFit, FitFamily, PropertyRecord};
use sindybench_core::{Error, Result};

use crate::config::OptimizerChoice;

pub const DETAILS_FILE: &str = "details.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PROPERTIES_FILE: &str = "properties.csv";
pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const TIMINGS_FILE: &str = "timings.json";
pub const FAILURES_FILE: &str = "failures.csv";

pub const DETAILS_HEADER: [&str; 12] = [
    "system",
    "optimizer",
    "noise_percent",
    "hyperparameter",
    "member",
    "e_coef",
    "e_rmse",
    "k",
    "aic",
    "runtime_s",
    "proved_optimal",
    "valid",
];

pub const CORRELATIONS_HEADER: [&str; 12] = [
    "optimizer",
    "noise_percent",
    "property",
    "n_systems",
    "e_rmse_family",
    "e_rmse_r2",
    "e_rmse_slope",
    "e_rmse_intercept",
    "e_coef_family",
    "e_coef_r2",
    "e_coef_slope",
    "e_coef_intercept",
];

/// One member of a best ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailRow {
    pub system: String,
    pub optimizer: OptimizerChoice,
    pub noise_percent: f64,
    pub hyperparameter: String,
    pub member: usize,
    pub e_coef: f64,
    pub e_rmse: f64,
    pub k: usize,
    pub aic: f64,
    pub runtime_s: Option<f64>,
    pub proved_optimal: bool,
    pub valid: bool,
}

impl DetailRow {
    pub fn invalid(system: &str, optimizer: OptimizerChoice, noise_percent: f64, hyperparameter: &str, member: usize) -> Self {
        DetailRow {
            system: system.to_string(),
            optimizer,
            noise_percent,
            hyperparameter: hyperparameter.to_string(),
            member,
            e_coef: f64::NAN,
            e_rmse: f64::NAN,
            k: 0,
            aic: f64::NAN,
            runtime_s: None,
            proved_optimal: false,
            valid: false,
        }
    }

    fn record(&self) -> [String; 12] {
        [
            self.system.clone(),
            self.optimizer.name().to_string(),
            self.noise_percent.to_string(),
            self.hyperparameter.clone(),
            self.member.to_string(),
            self.e_coef.to_string(),
            self.e_rmse.to_string(),
            self.k.to_string(),
            self.aic.to_string(),
            self.runtime_s.map(|r| r.to_string()).unwrap_or_default(),
            self.proved_optimal.to_string(),
            self.valid.to_string(),
        ]
    }
}

/// Stability census of one ensemble-mean model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub system: String,
    pub optimizer: OptimizerChoice,
    pub noise_percent: f64,
    pub n_trials: usize,
    pub n_stable: usize,
}

/// Wall time of one Pareto scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskTiming {
    pub system: String,
    pub optimizer: OptimizerChoice,
    pub noise_percent: f64,
    pub seconds: f64,
}

/// A failure that did not abort the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskFailure {
    pub system: String,
    pub optimizer: Option<OptimizerChoice>,
    pub noise_percent: Option<f64>,
    pub message: String,
}

/// Mean and median across systems of the per-system best-ensemble mean errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub mean_e_coef: Option<f64>,
    pub median_e_coef: Option<f64>,
    pub mean_e_rmse: Option<f64>,
    pub median_e_rmse: Option<f64>,
    pub total_runtime_s: Option<f64>,
}

/// Best-family fits of per-system mean errors against one property.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub optimizer: OptimizerChoice,
    pub noise_percent: f64,
    pub property: &'static str,
    pub n_systems: usize,
    pub e_rmse: Option<CorrelationFit>,
    pub e_coef: Option<CorrelationFit>,
}

/// Mean errors of one system's best ensemble, over valid members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemErrors {
    pub e_coef: f64,
    pub e_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub optimizers: Vec<OptimizerChoice>,
    pub noise_percents: Vec<f64>,
    pub rows: Vec<DetailRow>,
    pub properties: Vec<(String, PropertyRecord)>,
    pub summary: BTreeMap<String, SummaryEntry>,
    pub correlations: Vec<CorrelationRow>,
    pub stability: Vec<StabilityRow>,
    pub timings: Vec<TaskTiming>,
    pub failures: Vec<TaskFailure>,
}

/// `"<optimizer>/<noise>"`.
pub fn summary_key(optimizer: OptimizerChoice, noise_percent: f64) -> String {
    format!("{optimizer}/{noise_percent}")
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
}

impl BenchmarkReport {
    /// Assembles a report and derives the summary and correlation tables.
    pub fn new(
        optimizers: Vec<OptimizerChoice>,
        noise_percents: Vec<f64>,
        rows: Vec<DetailRow>,
        properties: Vec<(String, PropertyRecord)>,
        stability: Vec<StabilityRow>,
        timings: Vec<TaskTiming>,
        failures: Vec<TaskFailure>,
    ) -> Self {
        let mut report = BenchmarkReport {
            optimizers,
            noise_percents,
            rows,
            properties,
            summary: BTreeMap::new(),
            correlations: Vec::new(),
            stability,
            timings,
            failures,
        };
        report.summary = report.compute_summary();
        report.correlations = report.compute_correlations();
        report
    }

    /// Systems in first-appearance order.
    pub fn systems(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.system.as_str()) {
                out.push(&r.system);
            }
        }
        out
    }

    /// Per-system mean errors for one (optimizer, noise), skipping systems
    /// without a valid member.
    pub fn system_errors(&self, optimizer: OptimizerChoice, noise_percent: f64) -> Vec<(String, SystemErrors)> {
        let mut out = Vec::new();
        for sys in self.systems() {
            let valid: Vec<&DetailRow> = self
                .rows
                .iter()
                .filter(|r| r.valid && r.system == sys && r.optimizer == optimizer && r.noise_percent == noise_percent)
                .collect();
            if valid.is_empty() {
                continue;
            }
            let n = valid.len() as f64;
            out.push((
                sys.to_string(),
                SystemErrors {
                    e_coef: valid.iter().map(|r| r.e_coef).sum::<f64>() / n,
                    e_rmse: valid.iter().map(|r| r.e_rmse).sum::<f64>() / n,
                },
            ));
        }
        out
    }

    pub fn property(&self, system: &str) -> Option<&PropertyRecord> {
        self.properties.iter().find(|(s, _)| s == system).map(|(_, p)| p)
    }

    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty() || self.rows.iter().any(|r| !r.valid)
    }

    fn compute_summary(&self) -> BTreeMap<String, SummaryEntry> {
        let mut out = BTreeMap::new();
        for &o in &self.optimizers {
            for &n in &self.noise_percents {
                let errs = self.system_errors(o, n);
                let coef: Vec<f64> = errs.iter().map(|(_, e)| e.e_coef).collect();
                let rmse: Vec<f64> = errs.iter().map(|(_, e)| e.e_rmse).collect();
                let times: Vec<f64> = self
                    .timings
                    .iter()
                    .filter(|t| t.optimizer == o && t.noise_percent == n)
                    .map(|t| t.seconds)
                    .collect();
                out.insert(
                    summary_key(o, n),
                    SummaryEntry {
                        mean_e_coef: mean(&coef),
                        median_e_coef: median(&coef),
                        mean_e_rmse: mean(&rmse),
                        median_e_rmse: median(&rmse),
                        total_runtime_s: (!times.is_empty()).then(|| times.iter().sum()),
                    },
                );
            }
        }
        out
    }

    /// Property values paired with per-system mean errors.
    pub fn property_points(
        &self,
        optimizer: OptimizerChoice,
        noise_percent: f64,
        property: usize,
    ) -> Vec<(f64, SystemErrors)> {
        self.system_errors(optimizer, noise_percent)
            .into_iter()
            .filter_map(|(sys, e)| self.property(&sys).map(|p| (p.values()[property], e)))
            .collect()
    }

    fn compute_correlations(&self) -> Vec<CorrelationRow> {
        let mut out = Vec::new();
        for &o in &self.optimizers {
            for &n in &self.noise_percents {
                for (i, &property) in PropertyRecord::NAMES.iter().enumerate() {
                    let pts = self.property_points(o, n, i);
                    let xs: Vec<f64> = pts.iter().map(|(x, _)| *x).collect();
                    let rmse: Vec<f64> = pts.iter().map(|(_, e)| e.e_rmse).collect();
                    let coef: Vec<f64> = pts.iter().map(|(_, e)| e.e_coef).collect();
                    out.push(CorrelationRow {
                        optimizer: o,
                        noise_percent: n,
                        property,
                        n_systems: pts.len(),
                        e_rmse: best_fit_r2(&xs, &rmse).ok(),
                        e_coef: best_fit_r2(&xs, &coef).ok(),
                    });
                }
            }
        }
        out
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: String) -> Error {
    Error::Parse {
        field: path.display().to_string(),
        message,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => parse_err(path, format!("{other:?}")),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn fit_fields(fit: &Option<CorrelationFit>) -> [String; 4] {
    match fit {
        Some(f) => [
            f.family.name().to_string(),
            f.r_squared.to_string(),
            f.slope.to_string(),
            f.intercept.to_string(),
        ],
        None => Default::default(),
    }
}

fn write_csv<I, R>(path: &Path, header: &[&str], records: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(csv_err(path))?;
    for r in records {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)
        .map_err(|e| Error::Evaluation(format!("{}: {e}", path.display())))?;
    f.write_all(b"\n").and_then(|_| f.flush()).map_err(io_err(path))
}

/// Writes `details.csv`, `summary.json`, `properties.csv` and
/// `correlations.csv`, plus `stability.csv`, `timings.json` and
/// `failures.csv` when the report has such entries. Returns the paths written.
pub fn write_reports(report: &BenchmarkReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let path = dir.join(DETAILS_FILE);
    write_csv(&path, &DETAILS_HEADER, report.rows.iter().map(DetailRow::record))?;
    written.push(path);

    let path = dir.join(SUMMARY_FILE);
    write_json(&path, &report.summary)?;
    written.push(path);

    let path = dir.join(PROPERTIES_FILE);
    let mut f = create(&path)?;
    write_properties_csv(&mut f, &report.properties)?;
    f.flush().map_err(io_err(&path))?;
    written.push(path);

    let path = dir.join(CORRELATIONS_FILE);
    write_csv(
        &path,
        &CORRELATIONS_HEADER,
        report.correlations.iter().map(|c| {
            let mut rec = vec![
                c.optimizer.name().to_string(),
                c.noise_percent.to_string(),
                c.property.to_string(),
                c.n_systems.to_string(),
            ];
            rec.extend(fit_fields(&c.e_rmse));
            rec.extend(fit_fields(&c.e_coef));
            rec
        }),
    )?;
    written.push(path);

    if !report.stability.is_empty() {
        let path = dir.join(STABILITY_FILE);
        write_csv(
            &path,
            &["system", "optimizer", "noise_percent", "n_trials", "n_stable"],
            report.stability.iter().map(|s| {
                [
                    s.system.clone(),
                    s.optimizer.name().to_string(),
                    s.noise_percent.to_string(),
                    s.n_trials.to_string(),
                    s.n_stable.to_string(),
                ]
            }),
        )?;
        written.push(path);
    }
    if !report.timings.is_empty() {
        let path = dir.join(TIMINGS_FILE);
        write_json(&path, &report.timings)?;
        written.push(path);
    }
    if !report.failures.is_empty() {
        let path = dir.join(FAILURES_FILE);
        write_csv(
            &path,
            &["system", "optimizer", "noise_percent", "message"],
            report.failures.iter().map(|f| {
                [
                    f.system.clone(),
                    f.optimizer.map(|o| o.name().to_string()).unwrap_or_default(),
                    f.noise_percent.map(|n| n.to_string()).unwrap_or_default(),
                    f.message.clone(),
                ]
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}

fn open_csv(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err(path))?;
    Ok((header, rows))
}

fn expect_header(path: &Path, header: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse_err(
            path,
            format!("unexpected header \"{}\"", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| parse_err(path, format!("line {line}: bad {name} \"{value}\"")))
}

/// Reads the rows of a `details.csv`.
pub fn read_details(path: &Path) -> Result<Vec<DetailRow>> {
    let (header, records) = open_csv(path)?;
    expect_header(path, &header, &DETAILS_HEADER)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i + 2;
            let f = |c: usize| r.get(c).unwrap_or("");
            let optimizer = OptimizerChoice::from_name(f(1))
                .ok_or_else(|| parse_err(path, format!("line {line}: unknown optimizer \"{}\"", f(1))))?;
            Ok(DetailRow {
                system: f(0).to_string(),
                optimizer,
                noise_percent: field(path, line, "noise_percent", f(2))?,
                hyperparameter: f(3).to_string(),
                member: field(path, line, "member", f(4))?,
                e_coef: field(path, line, "e_coef", f(5))?,
                e_rmse: field(path, line, "e_rmse", f(6))?,
                k: field(path, line, "k", f(7))?,
                aic: field(path, line, "aic", f(8))?,
                runtime_s: match f(9) {
                    "" => None,
                    v => Some(field(path, line, "runtime_s", v)?),
                },
                proved_optimal: field(path, line, "proved_optimal", f(10))?,
                valid: field(path, line, "valid", f(11))?,
            })
        })
        .collect()
}

/// Reads the records of a `properties.csv`.
pub fn read_properties(path: &Path) -> Result<Vec<(String, PropertyRecord)>> {
    let (header, records) = open_csv(path)?;
    let expected: Vec<&str> = std::iter::once("system").chain(PropertyRecord::NAMES).collect();
    expect_header(path, &header, &expected)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i + 2;
            let f = |c: usize| r.get(c).unwrap_or("");
            Ok((
                f(0).to_string(),
                PropertyRecord {
                    lyapunov_max: field(path, line, "lyapunov_max", f(1))?,
                    scale_separation: field(path, line, "scale_separation", f(2))?,
                    description_length: field(path, line, "description_length", f(3))?,
                    nonlinearity_score: field(path, line, "nonlinearity_score", f(4))?,
                },
            ))
        })
        .collect()
}

/// Rebuilds a report from a results directory. Optimizer and noise order
/// follow their first appearance in `details.csv`; stability, timings and
/// failures are not restored.
pub fn read_report(dir: &Path) -> Result<BenchmarkReport> {
    let rows = read_details(&dir.join(DETAILS_FILE))?;
    let properties = read_properties(&dir.join(PROPERTIES_FILE))?;
    let mut optimizers = Vec::new();
    let mut noises: Vec<f64> = Vec::new();
    for r in &rows {
        if !optimizers.contains(&r.optimizer) {
            optimizers.push(r.optimizer);
        }
        if !noises.contains(&r.noise_percent) {
            noises.push(r.noise_percent);
        }
    }
    Ok(BenchmarkReport::new(optimizers, noises, rows, properties, Vec::new(), Vec::new(), Vec::new()))
}

/// Family names for display; `None` when no family could be fitted.
pub fn family_name(fit: &Option<CorrelationFit>) -> &'static str {
    fit.map(|f| f.family.name()).unwrap_or("none")
}

/// Evaluates a fitted family at `x`.
pub fn fit_curve(fit: &CorrelationFit, x: f64) -> Option<f64> {
    let y = match fit.family {
        FitFamily::Linear => fit.intercept + fit.slope * x,
        FitFamily::LogLinear => (fit.intercept + fit.slope * x).exp(),
        FitFamily::LogLog if x > 0.0 => (fit.intercept + fit.slope * x.ln()).exp(),
        FitFamily::LogLog => return None,
    };
    y.is_finite().then_some(y)
}
