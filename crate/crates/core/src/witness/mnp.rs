//! Wolfe's minimum-norm-point algorithm over the column hull of a forward
//! matrix.
//!
//! Finds `q* = argmin { ||p - q|| : q in conv(a_1, ..., a_N) }`. Each major
//! step adds the column minimizing the linear model (a single scan over the
//! columns); minor steps move to the affine minimizer of the active set,
//! dropping columns whose barycentric weight would turn negative.
//!
//! The affine minimizer is obtained from an upper-triangular `R` with
//! `R^T R = 1 1^T + B^T B`, where the columns of `B` are the translated
//! active points `a_k - p`. Adding a point appends a column; removing one
//! is followed by Givens rotations that restore triangularity.

use rayon::prelude::*;

use crate::phase_space::{dot, ForwardMatrix};
use crate::{Error, Result};

/// Termination report of the solver.
#[derive(Debug, Clone)]
pub(crate) struct MinNormPoint {
    /// Active column indices with their barycentric weights.
    pub active: Vec<(usize, f64)>,
    /// `q* = sum_k lambda_k a_k`
    pub nearest: Vec<f64>,
    pub iterations: usize,
    /// Frank-Wolfe duality gap `max_i (x . (q - a_i))` at termination,
    /// where `x = q - p`.
    pub duality_gap: f64,
}

/// Columns scanned per parallel task in the linear minimization oracle.
const SCAN_BLOCK: usize = 1024;

/// Index of the column with the largest `score`; the lowest index wins ties.
pub(crate) fn argmax_columns<F>(n: usize, score: F) -> (usize, f64)
where
    F: Fn(usize) -> f64 + Sync,
{
    let better = |a: (usize, f64), b: (usize, f64)| {
        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
            b
        } else {
            a
        }
    };
    (0..n.div_ceil(SCAN_BLOCK))
        .into_par_iter()
        .map(|blk| {
            let lo = blk * SCAN_BLOCK;
            let hi = (lo + SCAN_BLOCK).min(n);
            (lo..hi).fold((lo, f64::NEG_INFINITY), |acc, i| better(acc, (i, score(i))))
        })
        .reduce(|| (usize::MAX, f64::NEG_INFINITY), better)
}

struct Factor {
    /// Column `c` holds rows `0..=c` of `R` (one extra row transiently
    /// during a deletion).
    cols: Vec<Vec<f64>>,
    /// `z = R^{-T} 1`, kept up to date so that the affine minimizer costs a
    /// single back substitution.
    z: Vec<f64>,
}

impl Factor {
    fn new() -> Self {
        Self {
            cols: Vec::new(),
            z: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.cols.len()
    }

    /// Solve `R^T y = b`.
    fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(b.len());
        for (i, col) in self.cols.iter().enumerate() {
            let s = dot(&col[..i], &y);
            y.push((b[i] - s) / col[i]);
        }
        y
    }

    /// Solve `R x = z` in place.
    fn solve_upper(&self, z: &mut [f64]) {
        for k in (0..self.len()).rev() {
            let col = &self.cols[k];
            z[k] /= col[k];
            let xk = z[k];
            for (zi, ci) in z[..k].iter_mut().zip(&col[..k]) {
                *zi -= ci * xk;
            }
        }
    }

    /// Append a point whose cross terms with the active set are `rhs_k =
    /// 1 + b_k . b_new` and whose diagonal term is `1 + ||b_new||^2`.
    /// Returns `false` if the point is numerically affinely dependent.
    fn push(&mut self, rhs: &[f64], diag: f64) -> bool {
        let mut r = self.solve_lower(rhs);
        let rho2 = diag - dot(&r, &r);
        if !(rho2 > diag * 1e-14) {
            return false;
        }
        let rho = rho2.sqrt();
        self.z.push((1.0 - dot(&r, &self.z)) / rho);
        r.push(rho);
        self.cols.push(r);
        true
    }

    fn remove(&mut self, d: usize) {
        self.cols.remove(d);
        let s = self.cols.len();
        for i in d..s {
            let (a, b) = (self.cols[i][i], self.cols[i][i + 1]);
            let r = a.hypot(b);
            let (cs, sn) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
            for col in &mut self.cols[i..] {
                let (x, y) = (col[i], col[i + 1]);
                col[i] = cs * x + sn * y;
                col[i + 1] = -sn * x + cs * y;
            }
            let (x, y) = (self.z[i], self.z[i + 1]);
            self.z[i] = cs * x + sn * y;
            self.z[i + 1] = -sn * x + cs * y;
            self.cols[i].truncate(i + 1);
        }
        self.z.pop();
    }

    /// Barycentric coefficients of the affine minimizer of the active set.
    fn affine_minimizer(&self) -> Vec<f64> {
        let mut u = self.z.clone();
        self.solve_upper(&mut u);
        let total: f64 = u.iter().sum();
        u.iter_mut().for_each(|v| *v /= total);
        u
    }
}

struct Problem<'a> {
    matrix: &'a ForwardMatrix,
    target: &'a [f64],
    /// `a_i . p`
    a_dot_p: Vec<f64>,
    p_dot_p: f64,
}

impl Problem<'_> {
    /// `b_k . b_l` with `b_i = a_i - p`.
    fn gram(&self, k: usize, l: usize) -> f64 {
        let aa = self.matrix.column(k).dot_column(&self.matrix.column(l));
        aa - self.a_dot_p[k] - self.a_dot_p[l] + self.p_dot_p
    }

    fn combine(&self, active: &[usize], lambda: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.target.len()];
        for (&i, &l) in active.iter().zip(lambda) {
            let col = self.matrix.column(i);
            for (&r, &v) in col.rows.iter().zip(col.values) {
                q[r as usize] += l * v;
            }
        }
        q
    }

    fn factor(&self, active: &[usize]) -> Option<Factor> {
        let mut f = Factor::new();
        for (n, &t) in active.iter().enumerate() {
            let rhs: Vec<f64> = active[..n].iter().map(|&k| 1.0 + self.gram(k, t)).collect();
            if !f.push(&rhs, 1.0 + self.gram(t, t)) {
                return None;
            }
        }
        Some(f)
    }
}

/// Nearest point of the column hull of `matrix` to `target`.
///
/// Stops when the Frank-Wolfe duality gap drops to `gap_tol` (or to the
/// round-off floor of the gap evaluation when that is larger), or when the
/// current hull point is within `dist_tol` of the target, which certifies
/// that the target is classical up to `dist_tol`. Fails with
/// [`Error::NonConvergence`] after `max_iterations` major steps or when
/// progress stalls above the floor.
pub(crate) fn min_norm_point(
    matrix: &ForwardMatrix,
    target: &[f64],
    gap_tol: f64,
    dist_tol: f64,
    max_iterations: usize,
) -> Result<MinNormPoint> {
    Error::check_dim(matrix.rows(), target.len())?;
    let n = matrix.cols();
    if n == 0 {
        return Err(Error::config("forward matrix has no columns"));
    }
    let a_dot_p: Vec<f64> = (0..n).map(|i| matrix.column(i).dot(target)).collect();
    let prob = Problem {
        matrix,
        target,
        p_dot_p: dot(target, target),
        a_dot_p,
    };
    let max_col_norm = (0..n).map(|i| matrix.column(i).norm_sq().sqrt()).fold(0.0, f64::max);

    // start from the column closest to the target
    let (start, _) = argmax_columns(n, |i| -prob.gram(i, i));
    let mut active = vec![start];
    let mut lambda = vec![1.0];
    let mut factor = Factor::new();
    factor.push(&[], 1.0 + prob.gram(start, start));
    let mut q = prob.combine(&active, &lambda);
    let mut iterations = 0;
    let mut prev_norm_sq = f64::INFINITY;
    let mut refactored = false;

    loop {
        let x: Vec<f64> = q.iter().zip(target).map(|(a, b)| a - b).collect();
        let x_norm_sq = dot(&x, &x);
        let x_dot_q = dot(&x, &q);
        // gap_i = x . (q - a_i); the largest one picks the entering column
        let (enter, gap) = argmax_columns(n, |i| x_dot_q - matrix.column(i).dot(&x));
        let q_norm = dot(&q, &q).sqrt();
        let floor = 64.0 * f64::EPSILON * x_norm_sq.sqrt() * (q_norm + max_col_norm);
        let stop = gap_tol.max(floor);
        if gap <= stop || x_norm_sq <= dist_tol * dist_tol {
            return Ok(finish(active, lambda, q, iterations, gap));
        }
        let stalled = active.contains(&enter) || x_norm_sq >= prev_norm_sq;
        if stalled && refactored {
            if gap <= 1e3 * stop {
                return Ok(finish(active, lambda, q, iterations, gap));
            }
            return Err(Error::NonConvergence { iterations, gap });
        }
        if iterations >= max_iterations {
            return Err(Error::NonConvergence { iterations, gap });
        }
        iterations += 1;
        if stalled {
            // accumulated round-off in the factor: rebuild it and re-solve
            // on the current active set once before giving up
            refactored = true;
            prev_norm_sq = f64::INFINITY;
            match prob.factor(&active) {
                Some(f) => factor = f,
                None => return Err(Error::NonConvergence { iterations, gap }),
            }
        } else {
            refactored = false;
            prev_norm_sq = x_norm_sq;
            let rhs: Vec<f64> = active.iter().map(|&k| 1.0 + prob.gram(k, enter)).collect();
            if !factor.push(&rhs, 1.0 + prob.gram(enter, enter)) {
                if gap <= 1e3 * stop {
                    return Ok(finish(active, lambda, q, iterations, gap));
                }
                return Err(Error::NonConvergence { iterations, gap });
            }
            active.push(enter);
            lambda.push(0.0);
        }
        minor_cycle(&mut factor, &mut active, &mut lambda).ok_or(Error::NonConvergence { iterations, gap })?;
        q = prob.combine(&active, &lambda);
    }
}

/// Move to the affine minimizer of the active set, dropping points until
/// all barycentric weights are positive. `None` if the set empties.
fn minor_cycle(factor: &mut Factor, active: &mut Vec<usize>, lambda: &mut Vec<f64>) -> Option<()> {
    loop {
        let alpha = factor.affine_minimizer();
        if alpha.iter().all(|&a| a > 0.0) {
            *lambda = alpha;
            return Some(());
        }
        let mut theta = 1.0;
        let mut leaving = usize::MAX;
        for (k, (&l, &a)) in lambda.iter().zip(&alpha).enumerate() {
            if a <= 0.0 {
                let t = l / (l - a);
                if t < theta {
                    theta = t;
                    leaving = k;
                }
            }
        }
        for (l, a) in lambda.iter_mut().zip(&alpha) {
            *l += theta * (a - *l);
        }
        if leaving != usize::MAX {
            lambda[leaving] = 0.0;
        }
        for k in (0..active.len()).rev() {
            if lambda[k] <= 0.0 {
                active.remove(k);
                lambda.remove(k);
                factor.remove(k);
            }
        }
        if active.is_empty() {
            return None;
        }
    }
}

fn finish(
    active: Vec<usize>,
    lambda: Vec<f64>,
    nearest: Vec<f64>,
    iterations: usize,
    duality_gap: f64,
) -> MinNormPoint {
    let mut pairs: Vec<(usize, f64)> = active.into_iter().zip(lambda).collect();
    pairs.sort_by_key(|&(i, _)| i);
    MinNormPoint {
        active: pairs,
        nearest,
        iterations,
        duality_gap,
    }
}
