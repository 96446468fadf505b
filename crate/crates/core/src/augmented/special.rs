//! Hand-built flat augmented systems for the zoo operators.

use num_traits::One;

use super::AugmentedSystem;
use crate::diffop::{builtin, canonical_name, sym_count, sym_index};
use crate::error::{Error, Result};
use crate::multipoly::{GaussianRational, MultiIndex};

type G = GaussianRational;

/// Operators with a hand-built flat system.
pub const SPECIAL_SYSTEMS: &[&str] = &[
    "divergence",
    "double_divergence",
    "tracefree_double_divergence",
    "symmetric_divergence",
    "tracefree_symmetric_divergence",
    "einstein_constraint",
    "einstein_constraint_cmc",
];

fn unit(d: usize, i: usize) -> MultiIndex {
    MultiIndex::unit(d, i)
}

fn zero(d: usize) -> MultiIndex {
    MultiIndex::zero(d)
}

/// `φ` with `∂_iφ = ω_i`, `∂_iω_j = ψ_ij (+ w δ_ij)` and, trace-free,
/// `∂_i w = (1/(d−1)) ∂_ℓ ψ_iℓ`. `psi0` is the first `P*` row of the block.
fn hessian_part(s: &mut AugmentedSystem, comp: usize, psi0: usize, tracefree: bool, grad_name: &str) {
    let d = s.d;
    let phi_name = s.pstar.in_labels[comp].clone();
    let phi = s.push_var(phi_name, 0, vec![(zero(d), comp, G::one())]);
    s.primary[comp] = phi;
    let grad: Vec<usize> = (0..d)
        .map(|j| s.push_var(format!("{grad_name}{}", j + 1), -1, vec![(unit(d, j), comp, G::one())]))
        .collect();
    let w = tracefree.then(|| {
        let jet = (0..d).map(|l| (unit(d, l).raised(l), comp, G::ratio(1, d as i64))).collect();
        s.push_var("w".into(), -2, jet)
    });
    for i in 0..d {
        s.add_b(i, phi, grad[i], G::one());
        for j in 0..d {
            s.add_c(i, grad[j], zero(d), psi0 + sym_index(d, i, j), G::one());
        }
        if let Some(w) = w {
            s.add_b(i, grad[i], w, G::one());
            for l in 0..d {
                s.add_c(i, w, unit(d, l), psi0 + sym_index(d, i, l), G::ratio(1, d as i64 - 1));
            }
        }
    }
}

/// `ω` with `η_jk = ½(∂_jω_k − ∂_kω_j)` and, conformal, `w = (1/d)∂_ℓω_ℓ`,
/// `ζ_j = ∂_j w`. `comp0` is the first `ω` component of `φ`.
fn killing_part(s: &mut AugmentedSystem, comp0: usize, psi0: usize, conformal: bool) {
    let d = s.d;
    let half = G::ratio(1, 2);
    let omega: Vec<usize> = (0..d)
        .map(|j| {
            let name = s.pstar.in_labels[comp0 + j].clone();
            let a = s.push_var(name, 0, vec![(zero(d), comp0 + j, G::one())]);
            s.primary[comp0 + j] = a;
            a
        })
        .collect();
    let mut eta = vec![vec![None; d]; d];
    for j in 0..d {
        for k in j + 1..d {
            let jet = vec![(unit(d, j), comp0 + k, half.clone()), (unit(d, k), comp0 + j, -half.clone())];
            eta[j][k] = Some(s.push_var(format!("eta{}{}", j + 1, k + 1), -1, jet));
        }
    }
    // η_ij as (variable, sign), or None on the diagonal.
    let eta_at = |i: usize, j: usize| -> Option<(usize, G)> {
        if i < j {
            eta[i][j].map(|a| (a, G::one()))
        } else if i > j {
            eta[j][i].map(|a| (a, -G::one()))
        } else {
            None
        }
    };
    let inv_d = G::ratio(1, d as i64);
    let conf = conformal.then(|| {
        let w = s.push_var("w".into(), -1, (0..d).map(|l| (unit(d, l), comp0 + l, inv_d.clone())).collect());
        let zeta: Vec<usize> = (0..d)
            .map(|j| {
                let jet = (0..d).map(|l| (unit(d, l).raised(j), comp0 + l, inv_d.clone())).collect();
                s.push_var(format!("zeta{}", j + 1), -2, jet)
            })
            .collect();
        (w, zeta)
    });
    let psi = |i: usize, j: usize| psi0 + sym_index(d, i, j);
    for i in 0..d {
        for j in 0..d {
            if let Some((e, sg)) = eta_at(i, j) {
                s.add_b(i, omega[j], e, sg);
            }
            s.add_c(i, omega[j], zero(d), psi(i, j), -G::one());
        }
        for j in 0..d {
            for k in j + 1..d {
                let e = eta[j][k].unwrap();
                s.add_c(i, e, unit(d, k), psi(i, j), G::one());
                s.add_c(i, e, unit(d, j), psi(k, i), -G::one());
                if let Some((_, zeta)) = &conf {
                    if i == k {
                        s.add_b(i, e, zeta[j], G::one());
                    }
                    if i == j {
                        s.add_b(i, e, zeta[k], -G::one());
                    }
                }
            }
        }
        if let Some((w, zeta)) = &conf {
            s.add_b(i, omega[i], *w, G::one());
            s.add_b(i, *w, zeta[i], G::one());
            let f = G::ratio(1, d as i64 - 2);
            let g = &f * &G::ratio(1, d as i64 - 1);
            for j in 0..d {
                let z = zeta[j];
                for l in 0..d {
                    let ll = unit(d, l);
                    s.add_c(i, z, ll.raised(i), psi(l, j), -f.clone());
                    s.add_c(i, z, ll.raised(j), psi(l, i), -f.clone());
                    s.add_c(i, z, ll.raised(l), psi(i, j), f.clone());
                    if i == j {
                        for m in 0..d {
                            s.add_c(i, z, ll.raised(m), psi(l, m), g.clone());
                        }
                    }
                }
            }
        }
    }
}

/// The flat augmented system of a zoo operator.
pub fn special_system(name: &str, d: usize) -> Result<AugmentedSystem> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownName(name.to_string()))?;
    let pstar = builtin(canon, d)?.adjoint();
    let mut s = AugmentedSystem::empty(canon, pstar);
    let n = sym_count(d);
    match canon {
        "divergence" => {
            let phi = s.push_var("phi".into(), 0, vec![(zero(d), 0, G::one())]);
            s.primary[0] = phi;
            for i in 0..d {
                s.add_c(i, phi, zero(d), i, -G::one());
            }
        }
        "double_divergence" => hessian_part(&mut s, 0, 0, false, "omega"),
        "tracefree_double_divergence" => hessian_part(&mut s, 0, 0, true, "omega"),
        "symmetric_divergence" => killing_part(&mut s, 0, 0, false),
        "tracefree_symmetric_divergence" => killing_part(&mut s, 0, 0, true),
        "einstein_constraint" | "einstein_constraint_cmc" => {
            hessian_part(&mut s, 0, 0, false, "alpha");
            killing_part(&mut s, 1, n, canon.ends_with("cmc"));
        }
        _ => unreachable!(),
    }
    s.check_grading()?;
    Ok(s)
}
