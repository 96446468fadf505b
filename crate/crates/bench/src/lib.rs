//! Fixtures shared by the benchmarks.

use curvesolve::diffop::{ScalarTestFunction, TestFunction};
use curvesolve::multipoly::RealPoly;

/// Unit-amplitude bump of radius `r` centred at `c`.
pub fn bump(c: &[f64], r: f64) -> TestFunction {
    TestFunction::scalar(ScalarTestFunction::bump(c, r, 8, RealPoly::constant(c.len(), 1.0)))
}

/// `n` points spread over `[-1, 1]^2`, away from the origin.
pub fn ring(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
            let r = 0.3 + 0.6 * (i % 3) as f64 / 2.0;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_stays_in_the_box() {
        assert!(ring(12).iter().all(|p| p.iter().all(|v| v.abs() <= 1.0)));
    }
}
