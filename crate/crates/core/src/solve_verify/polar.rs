//! Polar quadrature around a point, with radial panels split at supplied
//! break points, and exact-rule integration against test-function terms.

use std::f64::consts::PI;

use crate::diffop::{Envelope, ScalarTestFunction};
use crate::error::{Error, Result};
use crate::quadrature;

/// Angular nodes and weights on `S^{d−1}` (`d ∈ {2, 3}`). `n` controls the
/// resolution: `n` equispaced angles in 2D, `n` Gauss–Legendre polar nodes ×
/// `2n` azimuths in 3D.
pub fn sphere_rule(d: usize, n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match d {
        2 => Ok((0..n)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                (vec![a.cos(), a.sin()], 2.0 * PI / n as f64)
            })
            .collect()),
        3 => {
            let r = quadrature::rule(n);
            let m = 2 * n;
            let mut out = Vec::with_capacity(n * m);
            for (c, w) in r.nodes.iter().zip(&r.weights) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..m {
                    let a = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    out.push((vec![s * a.cos(), s * a.sin(), *c], w * 2.0 * PI / m as f64));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("polar quadrature is implemented for d = 2, 3 (got {d})"))),
    }
}

/// Parameters `t ≥ 0` where `p + t v` (unit `v`) crosses the sphere `|x − c| = r`.
pub fn ray_sphere(p: &[f64], v: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    let b: f64 = v.iter().zip(p.iter().zip(c)).map(|(a, (x, y))| a * (x - y)).sum();
    let cc: f64 = p.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() - r * r;
    let disc = b * b - cc;
    if disc <= 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    [-b - s, -b + s].into_iter().filter(|t| *t > 0.0).collect()
}

/// Radial resolution and panel control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarRule {
    pub angular: usize,
    pub radial: usize,
    pub max_panel: f64,
}

/// `∫_{R^d} g dx` in polar coordinates `x = center + tθ`. `breaks(θ)`
/// returns sorted interior break points and `t_max(θ)` the outer radius;
/// `g(θ, t)` must not include the Jacobian `t^{d−1}`.
pub fn polar_integral<B, G>(center: &[f64], rule: PolarRule, dim: usize, breaks: B, g: G) -> Result<Vec<f64>>
where
    B: Fn(&[f64]) -> (Vec<f64>, f64),
    G: Fn(&[f64], f64) -> Vec<f64>,
{
    let d = center.len();
    let gl = quadrature::rule(rule.radial);
    let mut acc = vec![0.0; dim];
    for (theta, wa) in sphere_rule(d, rule.angular)? {
        let (mut pts, tmax) = breaks(&theta);
        pts.retain(|t| *t > 0.0 && *t < tmax);
        pts.push(0.0);
        pts.push(tmax);
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite break points"));
        pts.dedup();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let pieces = ((b - a) / rule.max_panel).ceil().max(1.0) as usize;
            let h = (b - a) / pieces as f64;
            for p in 0..pieces {
                let lo = a + p as f64 * h;
                for (t, wr) in gl.on(lo, lo + h) {
                    let v = g(&theta, t);
                    let jac = wa * wr * t.powi(d as i32 - 1);
                    for (s, x) in acc.iter_mut().zip(v) {
                        *s += jac * x;
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// `∫ f(x) g(x) dx` for a scalar test function, term by term in polar
/// coordinates around each term's centre. Exact for bump terms when `g` is a
/// polynomial of degree below `extra_degree`.
pub fn integrate_against<G: Fn(&[f64]) -> f64>(f: &ScalarTestFunction, g: &G, extra_degree: usize) -> Result<f64> {
    let d = f.d;
    let mut total = 0.0;
    for term in &f.terms {
        let deg = term.poly.max_degree().unwrap_or(0) as usize + extra_degree;
        let (tmax, rule) = match term.envelope {
            Envelope::Bump { radius, power } => {
                (radius, PolarRule { angular: deg + 4, radial: power as usize + deg / 2 + d + 2, max_panel: f64::INFINITY })
            }
            Envelope::Gaussian { sigma } => {
                let r = term.radius(1e-18);
                (r, PolarRule { angular: deg + 24, radial: 24, max_panel: sigma })
            }
        };
        let v = polar_integral(&term.center, rule, 1, |_| (Vec::new(), tmax), |th, t| {
            let x: Vec<f64> = term.center.iter().zip(th).map(|(c, u)| c + t * u).collect();
            vec![term.eval(&x) * g(&x)]
        })?;
        total += v[0];
    }
    Ok(total)
}
