//! Published flat-space kernels for the classical operators. Each formula is
//! written in terms of one scalar factor `ρ(z)`: the radial integral `R(z; y)`
//! for Bogovskii weights or `η̸(ẑ)` for conic weights. Outer derivatives are
//! taken by Richardson-extrapolated central differences.

use nalgebra::DMatrix;

use super::fd;
use crate::diffop::sym_index;
use crate::error::{Error, Result};
use crate::multipoly::MultiIndex;

/// Operators with a closed-form flat kernel.
pub const CLOSED_FORMS: &[&str] = &[
    "divergence",
    "double_divergence",
    "tracefree_double_divergence",
    "symmetric_divergence",
    "tracefree_symmetric_divergence",
];

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn grad<F: Fn(&[f64]) -> Vec<f64>>(f: &F, z: &[f64], h: f64) -> Vec<Vec<f64>> {
    (0..z.len()).map(|a| fd::deriv(f, z, &MultiIndex::unit(z.len(), a), h)).collect()
}

fn hessian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, z: &[f64], h: f64) -> Vec<Vec<Vec<f64>>> {
    let d = z.len();
    let mut out = vec![vec![Vec::new(); d]; d];
    for a in 0..d {
        for b in a..d {
            let v = fd::deriv(f, z, &MultiIndex::unit(d, a).raised(b), h);
            out[b][a] = v.clone();
            out[a][b] = v;
        }
    }
    out
}

/// `(T*f)_ij = ½(f_ij + f_ji) − (1/d) tr f δ_ij`.
fn tstar(f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = f.len();
    let tr: f64 = (0..d).map(|i| f[i][i]).sum();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| 0.5 * (f[i][j] + f[j][i]) - if i == j { tr / d as f64 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// `(C*f)_ij = −∂^ℓ∂_i f_ℓj − ∂^ℓ∂_i f_jℓ + Δ f_ij + (1/(d−1)) ∂_i∂_j tr f`,
/// given `hf(a, b, i, j) = ∂_a ∂_b f_ij`.
fn cstar<H: Fn(usize, usize, usize, usize) -> f64>(d: usize, hf: H) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut v = 0.0;
            for l in 0..d {
                v -= hf(l, i, l, j) + hf(l, i, j, l);
                v += hf(l, l, i, j);
                v += hf(i, j, l, l) / (d as f64 - 1.0);
            }
            out[i][j] = v;
        }
    }
    out
}

/// Full-index kernel `K(z + y, y)` as an `#rows × #cols` matrix in the
/// operator's component storage.
pub fn closed_form_matrix<R: Fn(&[f64]) -> f64>(name: &str, d: usize, rho: &R, z: &[f64]) -> Result<DMatrix<f64>> {
    let r = norm(z);
    if r == 0.0 {
        return Err(Error::OnDiagonal);
    }
    let h = fd::base_step(z);
    let rd = |w: &[f64]| norm(w).powi(d as i32);
    let n = d * (d + 1) / 2;
    // V^{mi} = ρ z^m z^i / |z|^d
    let v_field = |w: &[f64]| -> Vec<f64> {
        let s = rho(w) / rd(w);
        (0..d * d).map(|k| s * w[k / d] * w[k % d]).collect()
    };
    match name {
        "divergence" => {
            let s = rho(z) / rd(z);
            Ok(DMatrix::from_fn(d, 1, |i, _| s * z[i]))
        }
        "double_divergence" => {
            let s = rho(z) / rd(z);
            let mut m = DMatrix::zeros(n, 1);
            for i in 0..d {
                for j in i..d {
                    m[(sym_index(d, i, j), 0)] = s * z[i] * z[j];
                }
            }
            Ok(m)
        }
        "tracefree_double_divergence" => {
            let a_field = |w: &[f64]| -> Vec<f64> {
                let s = rho(w) * norm(w).powi(2 - d as i32);
                w.iter().map(|x| s * x).collect()
            };
            let ga = grad(&a_field, z, h);
            let v = v_field(z);
            let c = 1.0 / (2.0 * (d as f64 - 1.0));
            let full: Vec<Vec<f64>> =
                (0..d).map(|i| (0..d).map(|j| v[i * d + j] + c * ga[j][i]).collect()).collect();
            let t = tstar(&full);
            let mut m = DMatrix::zeros(n, 1);
            for i in 0..d {
                for j in i..d {
                    m[(sym_index(d, i, j), 0)] = t[i][j];
                }
            }
            Ok(m)
        }
        "symmetric_divergence" => {
            let s = rho(z) / rd(z);
            let gv = grad(&v_field, z, h);
            // D^i = ∂_m V^{mi}
            let div: Vec<f64> = (0..d).map(|i| (0..d).map(|m| gv[m][m * d + i]).sum()).collect();
            let mut out = DMatrix::zeros(n, d);
            for i in 0..d {
                for j in i..d {
                    for k in 0..d {
                        let dij = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let mut v = 0.5 * s * (z[i] * dij(j, k) + z[j] * dij(i, k));
                        v += 0.5 * (div[i] * dij(j, k) + div[j] * dij(i, k));
                        v -= gv[k][i * d + j];
                        out[(sym_index(d, i, j), k)] = v;
                    }
                }
            }
            Ok(out)
        }
        "tracefree_symmetric_divergence" => {
            if d < 3 {
                return Err(Error::DimensionThreshold { name: name.into(), min: 3, d });
            }
            let s = rho(z) / rd(z);
            let w_field = |w: &[f64]| -> Vec<f64> {
                let s = rho(w) * norm(w).powi(2 - d as i32);
                w.iter().map(|x| s * x).collect()
            };
            // U^{ijk} = ρ z^i z^j z^k / |z|^d
            let u_field = |w: &[f64]| -> Vec<f64> {
                let s = rho(w) / rd(w);
                (0..d * d * d).map(|q| s * w[q / (d * d)] * w[(q / d) % d] * w[q % d]).collect()
            };
            let hw = hessian(&w_field, z, h);
            let hu = hessian(&u_field, z, h);
            let gv = grad(&v_field, z, h);
            let c2 = 1.0 / (2.0 * (d as f64 - 2.0));
            let c3 = 1.0 / (d as f64 - 2.0);
            let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            let mut out = DMatrix::zeros(n, d);
            for k in 0..d {
                let t1: Vec<Vec<f64>> =
                    (0..d).map(|i| (0..d).map(|j| s * z[i] * delta(j, k)).collect()).collect();
                let c_w = cstar(d, |a, b, i, j| hw[a][b][i] * delta(j, k));
                let c_u = cstar(d, |a, b, i, j| hu[a][b][(i * d + j) * d + k]);
                let t4: Vec<Vec<f64>> = (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| {
                                let div: f64 = (0..d).map(|l| gv[l][i * d + l]).sum();
                                gv[k][i * d + j] - delta(j, k) * div
                            })
                            .collect()
                    })
                    .collect();
                let full: Vec<Vec<f64>> = (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| t1[i][j] + c2 * c_w[i][j] - c3 * c_u[i][j] - t4[i][j])
                            .collect()
                    })
                    .collect();
                let t = tstar(&full);
                for i in 0..d {
                    for j in i..d {
                        out[(sym_index(d, i, j), k)] = t[i][j];
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("no closed-form flat kernel for {name}"))),
    }
}
