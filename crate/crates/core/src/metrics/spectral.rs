use rand::seq::SliceRandom;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::seed;
use crate::simulate::Trajectory;

/// Half-width of the Blackman-Harris main lobe, in frequency bins.
const MAIN_LOBE_BINS: usize = 4;

/// Ratio of the highest significant frequency to the dominant frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSeparation {
    pub ratio: f64,
    /// No channel had a significant frequency; `ratio` is 1.
    pub degenerate: bool,
}

fn blackman_harris(m: usize) -> Vec<f64> {
    let (a0, a1, a2, a3) = (0.35875, 0.48829, 0.14128, 0.01168);
    let tau = std::f64::consts::TAU;
    (0..m)
        .map(|i| {
            let x = tau * i as f64 / (m - 1) as f64;
            a0 - a1 * x.cos() + a2 * (2.0 * x).cos() - a3 * (3.0 * x).cos()
        })
        .collect()
}

struct Periodogram {
    window: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl Periodogram {
    fn new(m: usize) -> Self {
        Periodogram {
            window: blackman_harris(m),
            fft: FftPlanner::new().plan_fft_forward(m),
            buf: vec![Complex::default(); m],
        }
    }

    /// Power in bins `1..=M/2` of the mean-removed, windowed signal.
    fn power(&mut self, x: &[f64]) -> Vec<f64> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        for ((b, &v), &w) in self.buf.iter_mut().zip(x).zip(&self.window) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        self.fft.process(&mut self.buf);
        self.buf[1..=x.len() / 2].iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Dominant and highest significant bin of one channel, 1-based.
fn channel_bins(x: &[f64], n_surrogates: usize, quantile: f64, seed: u64, pg: &mut Periodogram) -> Option<(usize, usize)> {
    let power = pg.power(x);
    let mut rng = seed::rng(seed);
    let mut shuffled = x.to_vec();
    let mut levels: Vec<Vec<f64>> = vec![Vec::with_capacity(n_surrogates); power.len()];
    for _ in 0..n_surrogates {
        shuffled.shuffle(&mut rng);
        for (lv, p) in levels.iter_mut().zip(pg.power(&shuffled)) {
            lv.push(p);
        }
    }
    let rank = ((quantile * n_surrogates as f64).ceil() as usize).clamp(1, n_surrogates) - 1;
    let significant: Vec<bool> = levels
        .iter_mut()
        .zip(&power)
        .map(|(lv, &p)| {
            lv.sort_by(f64::total_cmp);
            p > lv[rank]
        })
        .collect();
    let top = significant.iter().rposition(|&s| s)?;
    let dominant = (0..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b]))?;
    // the highest run of significant bins; its leakage skirt is not a new scale
    let mut lo = top;
    while lo > 0 && significant[lo - 1] {
        lo -= 1;
    }
    let peak = (lo..=top).max_by(|&a, &b| power[a].total_cmp(&power[b]))?;
    let edge = top.saturating_sub(MAIN_LOBE_BINS).max(peak);
    Some((dominant + 1, edge + 1))
}

/// Spectral scale separation of a trajectory.
///
/// Per channel, the dominant frequency is the periodogram peak and the
/// highest significant frequency is the largest one whose power exceeds the
/// `quantile` level of `n_surrogates` shuffled copies of the channel.
/// Shuffling keeps the amplitude distribution and destroys temporal order,
/// so the surrogate level is the flat spectrum of uncorrelated samples. The
/// returned ratio is the maximum over channels, floored at 1.
pub fn scale_separation(traj: &Trajectory, n_surrogates: usize, quantile: f64, seed: u64) -> Result<ScaleSeparation> {
    let m = traj.len();
    if m < 256 {
        return Err(Error::argument(format!("scale separation needs at least 256 samples, got {m}")));
    }
    if n_surrogates < 20 {
        return Err(Error::argument(format!("at least 20 surrogates are required, got {n_surrogates}")));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::argument(format!("quantile must be in (0, 1), got {quantile}")));
    }
    let mut pg = Periodogram::new(m);
    let mut ratio: Option<f64> = None;
    for j in 0..traj.dimension() {
        let x: Vec<f64> = traj.states().column(j).iter().copied().collect();
        if let Some((dom, top)) = channel_bins(&x, n_surrogates, quantile, derive_seed!(seed, "surrogates", j), &mut pg) {
            let r = (top as f64 / dom as f64).max(1.0);
            ratio = Some(ratio.map_or(r, |q| q.max(r)));
        }
    }
    Ok(match ratio {
        Some(ratio) => ScaleSeparation { ratio, degenerate: false },
        None => ScaleSeparation { ratio: 1.0, degenerate: true },
    })
}
