//! Dormand–Prince 5(4) with the standard fourth-order continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-control and failure settings for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integration fails once the Euclidean state norm exceeds this bound.
    pub max_norm: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_norm: 1e6,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorOptions {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::argument(format!("{name} must be in (0, 1e-2], got {v}")));
            }
        }
        if !(self.max_norm > 0.0) {
            return Err(Error::argument("max_norm must be positive"));
        }
        Ok(())
    }
}

/// Interpolation data for one accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepSpan {
    pub t0: f64,
    pub h: f64,
}

pub(crate) struct Stepper<F> {
    f: F,
    n: usize,
    opts: IntegratorOptions,
    pub t: f64,
    pub y: Vec<f64>,
    h: f64,
    // stages; k[0] holds f(t, y) (first-same-as-last)
    k: [Vec<f64>; 7],
    y_new: Vec<f64>,
    y_stage: Vec<f64>,
    err: Vec<f64>,
    y_old: Vec<f64>,
    last: Option<StepSpan>,
    steps: usize,
}

impl<F: FnMut(&[f64], &mut [f64])> Stepper<F> {
    pub fn new(mut f: F, t0: f64, y0: &[f64], opts: IntegratorOptions) -> Result<Self> {
        let n = y0.len();
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("initial state is not finite"));
        }
        let mut k: [Vec<f64>; 7] = Default::default();
        for s in k.iter_mut() {
            *s = vec![0.0; n];
        }
        f(y0, &mut k[0]);
        let mut st = Stepper {
            f,
            n,
            opts,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            k,
            y_new: vec![0.0; n],
            y_stage: vec![0.0; n],
            err: vec![0.0; n],
            y_old: vec![0.0; n],
            last: None,
            steps: 0,
        };
        st.h = st.initial_step();
        Ok(st)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.abs_tol + self.opts.rel_tol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.n as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..self.n {
            let sk = self.scale(self.y[i], self.y[i]);
            d0 += (self.y[i] / sk).powi(2);
            d1 += (self.k[0][i] / sk).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for i in 0..self.n {
            self.y_stage[i] = self.y[i] + h0 * self.k[0][i];
        }
        (self.f)(&self.y_stage, &mut self.k[1]);
        let mut d2 = 0.0;
        for i in 0..self.n {
            let sk = self.scale(self.y[i], self.y[i]);
            d2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Re-seeds the state (e.g. after renormalising a tangent vector).
    pub fn reset_state(&mut self, y: &[f64]) {
        self.y.copy_from_slice(y);
        (self.f)(&self.y, &mut self.k[0]);
        self.last = None;
    }

    fn divergence(&self, reason: &str) -> Error {
        Error::Divergence {
            time: self.t,
            reason: reason.to_string(),
        }
    }

    /// Takes one accepted step, never passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<StepSpan> {
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(self.divergence("maximum number of steps exceeded"));
            }
            let remaining = t_limit - self.t;
            let mut h = self.h.min(remaining);
            // avoid a sliver step at the end
            if remaining - h < 1e-12 * remaining.abs().max(1.0) {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(self.divergence("step size underflow"));
            }
            self.stages(h);
            self.steps += 1;

            let mut e2 = 0.0;
            for i in 0..self.n {
                let sk = self.scale(self.y[i], self.y_new[i]);
                e2 += (self.err[i] / sk).powi(2);
            }
            let err = (e2 / self.n as f64).sqrt();
            if !err.is_finite() {
                self.h = h * 0.1;
                continue;
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
            if err <= 1.0 {
                self.y_old.copy_from_slice(&self.y);
                self.y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                let span = StepSpan { t0: self.t, h };
                self.t = if h == remaining { t_limit } else { self.t + h };
                self.h = h * fac;
                self.last = Some(span);
                let norm = self.y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !norm.is_finite() || norm > self.opts.max_norm {
                    return Err(self.divergence("state norm exceeded blow-up bound"));
                }
                return Ok(span);
            }
            self.h = h * fac.min(1.0);
        }
    }

    fn stages(&mut self, h: f64) {
        let n = self.n;
        let y = &self.y;
        let ys = &mut self.y_stage;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let f = &mut self.f;

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(ys, k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(ys, k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(ys, k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(ys, k5);
        for i in 0..n {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(ys, k6);
        for i in 0..n {
            self.y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(&self.y_new, k7);
        for i in 0..n {
            self.err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let _ = (C2, C3, C4, C5);
    }

    /// Dense-output coefficients of the last accepted step, appended to `out`
    /// as five consecutive length-n blocks.
    ///
    /// After a step `k[0]` holds the end-of-step slope and `k[6]` the start
    /// slope, since the stages were swapped for FSAL.
    pub fn push_dense(&self, out: &mut Vec<f64>) {
        let span = self.last.expect("dense output requires an accepted step");
        let h = span.h;
        let n = self.n;
        let (k1, k7) = (&self.k[6], &self.k[0]);
        let base = out.len();
        out.resize(base + 5 * n, 0.0);
        for i in 0..n {
            let ydiff = self.y[i] - self.y_old[i];
            let bspl = h * k1[i] - ydiff;
            out[base + i] = self.y_old[i];
            out[base + n + i] = ydiff;
            out[base + 2 * n + i] = bspl;
            out[base + 3 * n + i] = ydiff - h * k7[i] - bspl;
            out[base + 4 * n + i] = h
                * (D1 * k1[i]
                    + D3 * self.k[2][i]
                    + D4 * self.k[3][i]
                    + D5 * self.k[4][i]
                    + D6 * self.k[5][i]
                    + D7 * k7[i]);
        }
    }

    /// Interpolates inside the last accepted step without storing it.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let span = self.last.expect("interpolation requires an accepted step");
        let mut buf = Vec::with_capacity(5 * self.n);
        self.push_dense(&mut buf);
        eval_dense(&buf, self.n, (t - span.t0) / span.h, out);
    }
}

pub(crate) fn eval_dense(coeffs: &[f64], n: usize, theta: f64, out: &mut [f64]) {
    let th1 = 1.0 - theta;
    for i in 0..n {
        let r = |j: usize| coeffs[j * n + i];
        out[i] = r(0) + theta * (r(1) + th1 * (r(2) + theta * (r(3) + th1 * r(4))));
    }
}
