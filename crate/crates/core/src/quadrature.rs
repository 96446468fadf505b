//! Gauss–Legendre rules (cached) and adaptive one-dimensional integration.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes and weights on `[−1, 1]`.
#[derive(Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `(node, weight)` pairs mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (m + h * x, h * w))
    }
}

/// The `n`-point Gauss–Legendre rule, computed once per `n`.
pub fn rule(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("rule cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(n.max(2)).expect("valid degree");
            let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
            Arc::new(Rule { nodes, weights })
        })
        .clone()
}

/// Fixed-order integral of a vector-valued function.
pub fn gl_vec<F: Fn(f64) -> Vec<f64>>(f: &F, a: f64, b: f64, n: usize, dim: usize) -> Vec<f64> {
    let r = rule(n);
    let mut acc = vec![0.0; dim];
    for (x, w) in r.on(a, b) {
        for (s, v) in acc.iter_mut().zip(f(x)) {
            *s += w * v;
        }
    }
    acc
}

pub fn gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    rule(n).on(a, b).map(|(x, w)| w * f(x)).sum()
}

/// Adaptive bisection with a 16-point rule per panel. A panel is accepted
/// once the two-halves estimate agrees with the whole-panel estimate to
/// `tol · max(1, |value|)` (max-norm).
pub fn adaptive_vec<F: Fn(f64) -> Vec<f64>>(f: &F, a: f64, b: f64, dim: usize, tol: f64) -> Result<Vec<f64>> {
    const N: usize = 16;
    const MAX_DEPTH: u32 = 30;
    let whole = gl_vec(f, a, b, N, dim);
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut total = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    let scale = |v: &[f64]| v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gl_vec(f, lo, mid, N, dim);
        let right = gl_vec(f, mid, hi, N, dim);
        let refined: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let err = refined.iter().zip(&est).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let width_share = (hi - lo) / (b - a);
        if err <= tol * scale(&refined) * width_share.max(1e-3) || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && err > tol * scale(&refined) {
                worst = worst.max(err);
            }
            for (t, v) in total.iter_mut().zip(refined) {
                *t += v;
            }
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    if worst > 0.0 {
        return Err(Error::Tolerance { target: tol, achieved: worst });
    }
    Ok(total)
}

pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    Ok(adaptive_vec(&|x| vec![f(x)], a, b, 1, tol)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let v = gl(&|x: f64| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 4);
        assert!((v - (256.0 / 8.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let f = |x: f64| (-(x - 0.3) * (x - 0.3) / 1e-4).exp();
        let v = adaptive(&f, 0.0, 1.0, 1e-12).unwrap();
        let exact = (1e-4f64 * std::f64::consts::PI).sqrt();
        assert!((v - exact).abs() < 1e-12, "{v} {exact}");
    }
}
