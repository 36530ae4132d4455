use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFamily {
    /// `y = a + b x`
    Linear,
    /// `ln y = a + b x`
    LogLinear,
    /// `ln y = a + b ln x`
    LogLog,
}

impl FitFamily {
    pub const ALL: [FitFamily; 3] = [FitFamily::Linear, FitFamily::LogLinear, FitFamily::LogLog];

    pub fn name(self) -> &'static str {
        match self {
            FitFamily::Linear => "linear",
            FitFamily::LogLinear => "log_linear",
            FitFamily::LogLog => "log_log",
        }
    }

    /// Maps a point into the family's regression space, if it is usable there.
    fn transform(self, x: f64, y: f64) -> Option<(f64, f64)> {
        let (u, v) = match self {
            FitFamily::Linear => (x, y),
            FitFamily::LogLinear if y > 0.0 => (x, y.ln()),
            FitFamily::LogLog if x > 0.0 && y > 0.0 => (x.ln(), y.ln()),
            _ => return None,
        };
        (u.is_finite() && v.is_finite()).then_some((u, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationFit {
    pub family: FitFamily,
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub n_points_used: usize,
}

/// Ordinary least squares in one family's transformed space, or `None`
/// with fewer than three usable points.
pub fn fit_family(family: FitFamily, xs: &[f64], ys: &[f64]) -> Option<CorrelationFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter_map(|(&x, &y)| family.transform(x, y)).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mu = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let suu: f64 = pts.iter().map(|p| (p.0 - mu).powi(2)).sum();
    let suv: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    let svv: f64 = pts.iter().map(|p| (p.1 - mv).powi(2)).sum();
    let slope = if suu > 0.0 { suv / suu } else { 0.0 };
    let intercept = mv - slope * mu;
    let r_squared = if svv > 0.0 && suu > 0.0 {
        let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (1.0 - ss_res / svv).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Some(CorrelationFit { family, intercept, slope, r_squared, n_points_used: pts.len() })
}

/// Best of the linear, log-linear and log-log fits by R², each computed in
/// its own transformed space. Earlier families win exact ties.
pub fn best_fit_r2(xs: &[f64], ys: &[f64]) -> Result<CorrelationFit> {
    if xs.len() != ys.len() {
        return Err(Error::argument(format!("{} x values but {} y values", xs.len(), ys.len())));
    }
    FitFamily::ALL
        .iter()
        .filter_map(|&f| fit_family(f, xs, ys))
        .fold(None, |best: Option<CorrelationFit>, fit| match best {
            Some(b) if b.r_squared >= fit.r_squared => Some(b),
            _ => Some(fit),
        })
        .ok_or_else(|| Error::argument("fewer than 3 usable points in every regression family"))
}
