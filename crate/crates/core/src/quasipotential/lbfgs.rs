//! Limited-memory BFGS with backtracking, tolerant of infeasible trial
//! points (reported as `None`, treated as `+∞`).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `‖∇f‖_∞` drops below this.
    pub grad_tol: f64,
    /// Stop when an iteration decreases `f` by less than this, relatively.
    pub rel_tol: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 10, max_iter: 500, grad_tol: 1e-9, rel_tol: 1e-12, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` from `x0`; `f` returns the value and gradient, or `None`
/// outside the domain. `x0` must be feasible.
pub fn minimize(
    x0: Vec<f64>,
    mut f: impl FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    opts: &LbfgsOptions,
) -> Option<LbfgsResult> {
    let (mut fx, mut g) = f(&x0)?;
    let mut x = x0;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut small_steps = 0;
    for it in 0..opts.max_iter {
        let gnorm = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gnorm < opts.grad_tol {
            return Some(LbfgsResult { x, value: fx, iterations: it, converged: true });
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = hist.back().map_or(1.0 / gnorm.max(1e-300), |(s, y, _)| dot(s, y) / dot(y, y));
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hist.clear();
            dir = g.iter().map(|v| -v / gnorm).collect();
            slope = dot(&g, &dir);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fxn, gn)) = accepted else {
            if hist.is_empty() {
                return Some(LbfgsResult { x, value: fx, iterations: it, converged: false });
            }
            hist.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - fxn;
        x = xn;
        g = gn;
        let prev = fx;
        fx = fxn;
        if decrease <= opts.rel_tol * prev.abs().max(f64::MIN_POSITIVE) {
            small_steps += 1;
            if small_steps >= 5 {
                return Some(LbfgsResult { x, value: fx, iterations: it + 1, converged: true });
            }
        } else {
            small_steps = 0;
        }
    }
    Some(LbfgsResult { x, value: fx, iterations: opts.max_iter, converged: false })
}
