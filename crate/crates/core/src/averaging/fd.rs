//! Richardson-extrapolated central differences for vector-valued fields.

use crate::multipoly::MultiIndex;

/// Default base step `1e-4·(1 + |z|)`.
pub fn base_step(z: &[f64]) -> f64 {
    1e-4 * (1.0 + z.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `∂^α f(z)` by nested central differences, each with two levels of
/// Richardson extrapolation (steps `h`, `h/2`, `h/4`).
pub fn deriv<F: Fn(&[f64]) -> Vec<f64>>(f: &F, z: &[f64], alpha: &MultiIndex, h: f64) -> Vec<f64> {
    let Some(i) = alpha.0.iter().position(|&e| e > 0) else {
        return f(z);
    };
    let rest = alpha.lowered(i).expect("positive entry");
    let central = |step: f64| -> Vec<f64> {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[i] += step;
        zm[i] -= step;
        let a = deriv(f, &zp, &rest, h);
        let b = deriv(f, &zm, &rest, h);
        a.iter().zip(&b).map(|(p, m)| (p - m) / (2.0 * step)).collect()
    };
    let d0 = central(h);
    let d1 = central(h / 2.0);
    let d2 = central(h / 4.0);
    (0..d0.len())
        .map(|k| {
            let r0 = (4.0 * d1[k] - d0[k]) / 3.0;
            let r1 = (4.0 * d2[k] - d1[k]) / 3.0;
            (16.0 * r1 - r0) / 15.0
        })
        .collect()
}

/// Scalar convenience wrapper around [`deriv`].
pub fn deriv_scalar<F: Fn(&[f64]) -> f64>(f: &F, z: &[f64], alpha: &MultiIndex, h: f64) -> f64 {
    deriv(&|w: &[f64]| vec![f(w)], z, alpha, h)[0]
}
