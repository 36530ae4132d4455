//! Static SVG figures: error strip plots and property scatter plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sindybench_core::metrics::{CorrelationFit, PropertyRecord};
use sindybench_core::{Error, Result};

use crate::config::OptimizerChoice;
use crate::report::{fit_curve, BenchmarkReport};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Escapes text for use in SVG content and attribute values.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// A linear or base-10 logarithmic axis over a data range.
#[derive(Debug, Clone, Copy)]
struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    /// Log scale when every value is positive and they span over a decade.
    fn fit(values: &[f64]) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if finite.is_empty() {
            return Axis { log: false, lo: 0.0, hi: 1.0 };
        }
        if min > 0.0 && max / min > 10.0 {
            return Axis {
                log: true,
                lo: min.log10().floor(),
                hi: max.log10().ceil(),
            };
        }
        let pad = if max > min { 0.05 * (max - min) } else { 0.5 * min.abs().max(1.0) };
        Axis {
            log: false,
            lo: min - pad,
            hi: max + pad,
        }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let u = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        let t = (u - self.lo) / (self.hi - self.lo);
        t.is_finite().then_some(t)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 6.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                out.push(((e - self.lo) / (self.hi - self.lo), format!("1e{}", e as i64)));
                e += step;
            }
            return out;
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(raw);
        let mut out = Vec::new();
        let mut v = (self.lo / step).ceil() * step;
        while v <= self.hi + 1e-9 * step {
            out.push(((v - self.lo) / (self.hi - self.lo), fmt_num(v)));
            v += step;
        }
        out
    }
}

struct Frame {
    x: Axis,
    y: Axis,
}

impl Frame {
    fn px(&self, t: f64) -> f64 {
        LEFT + t * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, t: f64) -> f64 {
        HEIGHT - BOTTOM - t * (HEIGHT - TOP - BOTTOM)
    }

    fn point(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        Some((self.px(self.x.unit(x)?), self.py(self.y.unit(y)?)))
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (x0, x1, y0, y1) = (frame.px(0.0), frame.px(1.0), frame.py(0.0), frame.py(1.0));
    let _ = writeln!(
        svg,
        "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    for (t, label) in frame.y.ticks() {
        let y = frame.py(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x0:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            escape(&label)
        );
    }
    if x_ticks {
        for (t, label) in frame.x.ticks() {
            let x = frame.px(t);
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.1}\" y1=\"{y0:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\
                 <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                y0 + 5.0,
                y0 + 19.0,
                escape(&label)
            );
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let yc = (y0 + y1) / 2.0;
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{yc:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {yc:.1})\">{}</text>",
        escape(y_label)
    );
}

/// Marker shapes cycle with the series index so series stay distinct in
/// grayscale.
fn marker(svg: &mut String, shape: usize, x: f64, y: f64, color: &str) {
    let r = 4.0;
    let _ = match shape % 4 {
        0 => writeln!(svg, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{r}\" fill=\"{color}\"/>"),
        1 => writeln!(
            svg,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{}\" height=\"{}\" fill=\"{color}\"/>",
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        2 => writeln!(
            svg,
            "<polygon points=\"{x:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"{color}\"/>",
            y - r,
            x + r,
            y + r,
            x - r,
            y + r
        ),
        _ => writeln!(
            svg,
            "<polygon points=\"{x:.1},{:.1} {:.1},{y:.1} {x:.1},{:.1} {:.1},{y:.1}\" fill=\"{color}\"/>",
            y - r,
            x + r,
            y + r,
            x - r
        ),
    };
}

/// One series of a scatter plot.
#[derive(Debug, Clone)]
pub struct ScatterSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<CorrelationFit>,
}

/// Text annotation of a fitted family, e.g. `log_log R²=1.000 slope=2.000`.
pub fn fit_annotation(fit: &CorrelationFit) -> String {
    format!("{} R²={:.3} slope={:.3}", fit.family.name(), fit.r_squared, fit.slope)
}

/// Scatter plot with one fitted curve per series and a legend naming
/// every series. Series without a fit are drawn as points only.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, series: &[ScatterSeries]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let frame = Frame {
        x: Axis::fit(&xs),
        y: Axis::fit(&ys),
    };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &frame, x_label, y_label, true);
    let finite_x: Vec<f64> = xs.iter().copied().filter(|v| v.is_finite()).collect();
    let (xmin, xmax) = (
        finite_x.iter().copied().fold(f64::INFINITY, f64::min),
        finite_x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if let (Some(fit), true) = (&s.fit, xmax > xmin) {
            let mut path = Vec::new();
            for step in 0..=100 {
                let t = step as f64 / 100.0;
                let x = if frame.x.log {
                    10f64.powf(xmin.log10() + t * (xmax.log10() - xmin.log10()))
                } else {
                    xmin + t * (xmax - xmin)
                };
                let inside = fit_curve(fit, x)
                    .and_then(|y| frame.point(x, y))
                    .filter(|&(_, py)| (TOP..=HEIGHT - BOTTOM).contains(&py));
                if let Some((px, py)) = inside {
                    path.push(format!("{px:.1},{py:.1}"));
                }
            }
            if path.len() >= 2 {
                let _ = writeln!(
                    svg,
                    "<polyline class=\"fit\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                    path.join(" ")
                );
            }
        }
        for &(x, y) in &s.points {
            if let Some((px, py)) = frame.point(x, y) {
                marker(&mut svg, i, px, py, color);
            }
        }
    }
    // legend
    let lx = WIDTH - RIGHT + 14.0;
    let mut ly = TOP + 8.0;
    let _ = writeln!(svg, "<g class=\"legend\">");
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        marker(&mut svg, i, lx, ly, color);
        let _ = writeln!(
            svg,
            "<text class=\"legend-label\" x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 10.0,
            ly + 4.0,
            escape(&s.label)
        );
        let note = s.fit.as_ref().map(fit_annotation).unwrap_or_else(|| "no fit".into());
        let _ = writeln!(
            svg,
            "<text class=\"annotation\" x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\">{}</text>",
            lx + 10.0,
            ly + 17.0,
            escape(&note)
        );
        ly += 34.0;
    }
    let _ = writeln!(svg, "</g>\n</svg>");
    svg
}

fn quartiles(v: &[f64]) -> Option<(f64, f64, f64)> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let (i, f) = (pos.floor() as usize, pos.fract());
        s[i] + f * (s[(i + 1).min(s.len() - 1)] - s[i])
    };
    Some((q(0.25), q(0.5), q(0.75)))
}

/// Box and strip plot of per-system best-ensemble mean errors.
pub fn error_svg(title: &str, columns: &[(&str, Vec<f64>)]) -> String {
    let all: Vec<f64> = columns.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let n = columns.len().max(1) as f64;
    let frame = Frame {
        x: Axis { log: false, lo: 0.0, hi: n },
        y: Axis::fit(&all),
    };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &frame, "error metric", "per-system mean error", false);
    for (c, (label, values)) in columns.iter().enumerate() {
        let color = COLORS[c % COLORS.len()];
        let xc = frame.px((c as f64 + 0.5) / n);
        let half = 0.25 * (frame.px(1.0) - frame.px(0.0)) / n;
        let _ = writeln!(
            svg,
            "<text x=\"{xc:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            HEIGHT - BOTTOM + 19.0,
            escape(label)
        );
        if let Some((q1, q2, q3)) = quartiles(values) {
            let ys: Vec<Option<f64>> = [q1, q2, q3].iter().map(|&q| frame.y.unit(q).map(|t| frame.py(t))).collect();
            if let [Some(y1), Some(y2), Some(y3)] = ys[..] {
                let _ = writeln!(
                    svg,
                    "<rect class=\"box\" x=\"{:.1}\" y=\"{y3:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"{color}\"/>\
                     <line x1=\"{:.1}\" y1=\"{y2:.1}\" x2=\"{:.1}\" y2=\"{y2:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                    xc - half,
                    2.0 * half,
                    (y1 - y3).max(0.5),
                    xc - half,
                    xc + half
                );
            }
        }
        // deterministic horizontal jitter by rank
        for (i, &v) in values.iter().enumerate() {
            if let Some(t) = frame.y.unit(v) {
                let dx = ((i * 7919) % 21) as f64 / 20.0 - 0.5;
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.6\"/>",
                    xc + dx * half * 1.6,
                    frame.py(t)
                );
            }
        }
    }
    let _ = writeln!(svg, "</svg>");
    svg
}

fn write_svg(path: PathBuf, svg: &str) -> Result<PathBuf> {
    fs::write(&path, svg).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn error_plot_name(optimizer: OptimizerChoice, noise_percent: f64) -> String {
    format!("errors_{optimizer}_{noise_percent}.svg")
}

pub fn scatter_plot_name(metric: &str, property: &str, noise_percent: f64) -> String {
    format!("scatter_{metric}_{property}_{noise_percent}.svg")
}

/// Writes one error plot per (optimizer, noise) and one scatter plot per
/// (error metric, property, noise) into `dir`. Returns the paths written.
pub fn render_plots(report: &BenchmarkReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(Error::Argument("cannot plot an empty report".into()));
    }
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for &o in &report.optimizers {
        for &n in &report.noise_percents {
            let errs = report.system_errors(o, n);
            let columns = [
                ("E_coef", errs.iter().map(|(_, e)| e.e_coef).collect()),
                ("E_RMSE", errs.iter().map(|(_, e)| e.e_rmse).collect()),
            ];
            let title = format!("{o}, {n}% noise ({} systems)", errs.len());
            written.push(write_svg(dir.join(error_plot_name(o, n)), &error_svg(&title, &columns))?);
        }
    }
    for (metric, label) in [("e_rmse", "E_RMSE"), ("e_coef", "E_coef")] {
        for (p, &property) in PropertyRecord::NAMES.iter().enumerate() {
            for &n in &report.noise_percents {
                let series: Vec<ScatterSeries> = report
                    .optimizers
                    .iter()
                    .map(|&o| {
                        let pts = report.property_points(o, n, p);
                        let row = report
                            .correlations
                            .iter()
                            .find(|c| c.optimizer == o && c.noise_percent == n && c.property == property);
                        ScatterSeries {
                            label: o.name().to_string(),
                            points: pts
                                .iter()
                                .map(|(x, e)| (*x, if metric == "e_rmse" { e.e_rmse } else { e.e_coef }))
                                .collect(),
                            fit: row.and_then(|r| if metric == "e_rmse" { r.e_rmse } else { r.e_coef }),
                        }
                    })
                    .collect();
                let title = format!("{label} vs {property}, {n}% noise");
                let svg = scatter_svg(&title, property, label, &series);
                written.push(write_svg(dir.join(scatter_plot_name(metric, property, n)), &svg)?);
            }
        }
    }
    Ok(written)
}
