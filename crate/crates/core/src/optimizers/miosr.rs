//! Exact best-subset regression by depth-first branch and bound.
//!
//! A node fixes some features in and some out. Its lower bound is the
//! least-squares residual using every feature not excluded, which no
//! subset of those features can beat. Each node carries a triangular
//! factor of its allowed columns, updated by Givens rotations when a
//! feature is fixed or excluded, so bounds cost O(p²) per node.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use super::{assemble, stlsq, ColumnOutcome, FitResult, OptimizerConfig, ReducedProblem};
use crate::error::{Error, Result};
use crate::features::RegressionProblem;

/// Best-subset solution for one target column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnFit {
    pub coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub rss: f64,
    pub proved_optimal: bool,
    pub nodes: usize,
}

pub fn miosr(problem: &RegressionProblem, cfg: &OptimizerConfig) -> Result<FitResult> {
    let reduced = ReducedProblem::new(problem)?;
    cfg.validate(reduced.n_features(), reduced.n_targets())?;
    Ok(fit(&reduced, cfg))
}

pub(super) fn fit(reduced: &ReducedProblem, cfg: &OptimizerConfig) -> FitResult {
    let started = Instant::now();
    let p = reduced.n_features();
    let columns = (0..reduced.n_targets())
        .map(|j| {
            let limit = Duration::from_secs_f64(cfg.time_limit_per_dim);
            let best = branch_and_bound(reduced, j, cfg.sparsity_budgets[j], limit, cfg.max_nodes, cfg.ridge);
            let rank_deficient = reduced.solve_subset(j, &best.support, 0.0).rank_deficient;
            ColumnOutcome {
                coefficients: best.coefficients,
                iterations: best.nodes,
                proved_optimal: best.proved_optimal,
                converged: true,
                rank_deficient,
            }
        })
        .collect();
    assemble(p, columns, started)
}

struct Incumbent {
    support: Vec<usize>,
    coef: Vec<f64>,
    rss: f64,
}

impl Incumbent {
    fn offer(&mut self, reduced: &ReducedProblem, j: usize, support: &[usize]) {
        let sol = reduced.solve_subset(j, support, 0.0);
        if sol.rss < self.rss {
            self.rss = sol.rss;
            self.support = support.to_vec();
            self.coef = sol.coefficients;
        }
    }

    fn offer_sorted(&mut self, reduced: &ReducedProblem, j: usize, support: &[usize]) {
        let mut s = support.to_vec();
        s.sort_unstable();
        self.offer(reduced, j, &s);
    }

    fn into_fit(self, p: usize, proved_optimal: bool, nodes: usize) -> ColumnFit {
        ColumnFit {
            coefficients: ColumnOutcome::from_support(p, &self.support, &self.coef),
            support: self.support,
            rss: self.rss,
            proved_optimal,
            nodes,
        }
    }
}

/// Supports of size ≤ k from an STLSQ threshold sweep and greedy forward
/// selection.
fn warm_start(reduced: &ReducedProblem, j: usize, k: usize, ridge: f64) -> Incumbent {
    let p = reduced.n_features();
    let mut inc = Incumbent {
        support: Vec::new(),
        coef: Vec::new(),
        rss: reduced.null_rss(j),
    };
    let all: Vec<usize> = (0..p).collect();
    let scale = reduced
        .solve_subset(j, &all, 0.0)
        .coefficients
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()));
    if scale > 0.0 {
        let n = 30;
        for i in 0..n {
            let t = scale * 10f64.powf(-4.0 + 4.0 * i as f64 / (n - 1) as f64);
            let col = stlsq::column(reduced, j, t, ridge, 100);
            let support: Vec<usize> = (0..p).filter(|&q| col.coefficients[q] != 0.0).collect();
            if support.len() <= k {
                inc.offer(reduced, j, &support);
            }
        }
    }
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for q in 0..p {
            if chosen.contains(&q) {
                continue;
            }
            chosen.push(q);
            let rss = reduced.solve_subset(j, &chosen, 0.0).rss;
            chosen.pop();
            if best.is_none_or(|(b, _)| rss < b) {
                best = Some((rss, q));
            }
        }
        let Some((_, q)) = best else { break };
        chosen.push(q);
        chosen.sort_unstable();
        inc.offer(reduced, j, &chosen);
    }
    inc
}

/// Upper-triangular factor of the reduced columns on a node's allowed set,
/// ordered with the fixed-in features first.
#[derive(Clone)]
struct Factor {
    cols: Vec<usize>,
    t: DMatrix<f64>,
    w: DVector<f64>,
    fixed: usize,
    // residual of the least-squares fit on all of `cols`
    bound: f64,
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0)
    } else {
        (a / h, b / h)
    }
}

impl Factor {
    fn root(reduced: &ReducedProblem, j: usize) -> Self {
        let r = reduced.r();
        let p = reduced.n_features();
        let rows = r.nrows();
        // pad to square so column deletion always has a row to rotate into
        let mut t = DMatrix::zeros(p, p);
        let mut w = DVector::zeros(p);
        for c in 0..p {
            for i in 0..rows.min(c + 1) {
                t[(i, c)] = r[(i, c)];
            }
        }
        for i in 0..rows.min(p) {
            w[i] = reduced.z()[(i, j)];
        }
        Factor {
            cols: (0..p).collect(),
            t,
            w,
            fixed: 0,
            bound: reduced.offset(j),
        }
    }

    fn rotate(&mut self, r0: usize, c: f64, s: f64, from_col: usize) {
        let n = self.cols.len();
        for k in from_col..n {
            let (a, b) = (self.t[(r0, k)], self.t[(r0 + 1, k)]);
            self.t[(r0, k)] = c * a + s * b;
            self.t[(r0 + 1, k)] = -s * a + c * b;
        }
        let (a, b) = (self.w[r0], self.w[r0 + 1]);
        self.w[r0] = c * a + s * b;
        self.w[r0 + 1] = -s * a + c * b;
    }

    /// Drops the column at position `pos` and retriangularizes.
    fn exclude(&self, pos: usize) -> Self {
        let n = self.cols.len();
        let mut cols = self.cols.clone();
        cols.remove(pos);
        let mut out = Factor {
            cols,
            t: self.t.clone().remove_column(pos),
            w: self.w.clone(),
            fixed: self.fixed,
            bound: self.bound,
        };
        for r0 in pos..n - 1 {
            let (c, s) = givens(out.t[(r0, r0)], out.t[(r0 + 1, r0)]);
            out.rotate(r0, c, s, r0);
            out.t[(r0 + 1, r0)] = 0.0;
        }
        out.bound += out.w[n - 1] * out.w[n - 1];
        out.t = out.t.remove_row(n - 1);
        out.w = out.w.remove_row(n - 1);
        out
    }

    /// Moves the column at position `pos` to the end of the fixed block.
    fn include(mut self, pos: usize) -> Self {
        let f = self.fixed;
        let col = self.cols.remove(pos);
        self.cols.insert(f, col);
        let moved = self.t.column(pos).into_owned();
        for k in (f..pos).rev() {
            let src = self.t.column(k).into_owned();
            self.t.set_column(k + 1, &src);
        }
        self.t.set_column(f, &moved);
        for r0 in (f..pos).rev() {
            let (c, s) = givens(self.t[(r0, f)], self.t[(r0 + 1, f)]);
            self.rotate(r0, c, s, f);
            self.t[(r0 + 1, f)] = 0.0;
        }
        self.fixed += 1;
        self
    }

    /// Residual of the least-squares fit on the fixed block alone.
    fn fixed_rss(&self) -> f64 {
        self.bound + self.w.rows_range(self.fixed..).norm_squared()
    }
}

pub(crate) fn branch_and_bound(
    reduced: &ReducedProblem,
    j: usize,
    k: usize,
    time_limit: Duration,
    max_nodes: usize,
    ridge: f64,
) -> ColumnFit {
    let started = Instant::now();
    let p = reduced.n_features();
    let norms = reduced.column_norms();
    let mut inc = warm_start(reduced, j, k, ridge);
    let mut stack = vec![Factor::root(reduced, j)];
    let mut nodes = 0;
    while let Some(node) = stack.pop() {
        if nodes >= max_nodes || started.elapsed() > time_limit {
            return inc.into_fit(p, false, nodes);
        }
        nodes += 1;
        if node.bound >= inc.rss {
            continue;
        }
        let n = node.cols.len();
        if n <= k {
            inc.offer_sorted(reduced, j, &node.cols);
            continue;
        }
        let f = node.fixed;
        if f == k {
            if node.fixed_rss() < inc.rss {
                inc.offer_sorted(reduced, j, &node.cols[..f]);
            }
            continue;
        }
        // branch on the free feature most correlated with the residual of
        // the fixed-in features
        let resid = node.w.rows_range(f..);
        let mut pick = f;
        let mut best = -1.0;
        for pos in f..n {
            let q = node.cols[pos];
            let score = if norms[q] > 0.0 {
                (node.t.view((f, pos), (n - f, 1)).dot(&resid) / norms[q]).abs()
            } else {
                0.0
            };
            if score > best {
                best = score;
                pick = pos;
            }
        }
        stack.push(node.exclude(pick));
        stack.push(node.include(pick));
    }
    inc.into_fit(p, true, nodes)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub const EXHAUSTIVE_BUDGET: f64 = 1e6;

/// Enumerates every support of size ≤ k for target column `dim`.
pub fn exhaustive_best_subset(problem: &RegressionProblem, k: usize, dim: usize) -> Result<ColumnFit> {
    let reduced = ReducedProblem::new(problem)?;
    exhaustive_reduced(&reduced, k, dim)
}

pub(crate) fn exhaustive_reduced(reduced: &ReducedProblem, k: usize, dim: usize) -> Result<ColumnFit> {
    let p = reduced.n_features();
    if k == 0 || k > p {
        return Err(Error::argument(format!("subset size {k} outside 1..={p}")));
    }
    if dim >= reduced.n_targets() {
        return Err(Error::argument(format!("target column {dim} out of range")));
    }
    if binomial(p, k) > EXHAUSTIVE_BUDGET {
        return Err(Error::argument(format!(
            "C({p}, {k}) exceeds the exhaustive-search budget of {EXHAUSTIVE_BUDGET}"
        )));
    }
    let mut inc = Incumbent {
        support: Vec::new(),
        coef: Vec::new(),
        rss: reduced.null_rss(dim),
    };
    let mut nodes = 0;
    for size in 1..=k {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            nodes += 1;
            inc.offer(reduced, dim, &idx);
            // next combination in lexicographic order
            let mut i = size;
            while i > 0 && idx[i - 1] == p - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for t in i..size {
                idx[t] = idx[t - 1] + 1;
            }
        }
    }
    Ok(inc.into_fit(p, true, nodes))
}
