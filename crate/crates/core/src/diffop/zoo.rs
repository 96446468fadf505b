//! Built-in flat-space operators. Each is defined through its adjoint `P*`
//! written in full-index form; `P` is the weighted adjoint of that.

use num_traits::One;

use crate::error::{Error, Result};
use crate::multipoly::{GaussianRational, MultiIndex};

use super::DiffOperator;

type G = GaussianRational;

/// Names accepted by [`builtin`], with their minimal dimension.
pub const ZOO: &[(&str, usize)] = &[
    ("divergence", 1),
    ("double_divergence", 1),
    ("tracefree_double_divergence", 2),
    ("symmetric_divergence", 1),
    ("tracefree_symmetric_divergence", 3),
    ("einstein_constraint", 1),
    ("einstein_constraint_cmc", 3),
];

/// Resolves aliases such as `killing` to the canonical zoo name.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    let n = match name {
        "div" => "divergence",
        "ddiv" => "double_divergence",
        "tf_ddiv" | "tracefree_ddiv" => "tracefree_double_divergence",
        "killing" | "sym_div" => "symmetric_divergence",
        "conformal_killing" | "tf_sym_div" => "tracefree_symmetric_divergence",
        "einstein" => "einstein_constraint",
        "einstein_cmc" => "einstein_constraint_cmc",
        other => other,
    };
    ZOO.iter().find(|(z, _)| *z == n).map(|(z, _)| *z)
}

/// Number of stored components `j ≤ k` of a symmetric 2-tensor.
pub fn sym_count(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Storage slot of the symmetric pair `{j, k}` (either order).
pub fn sym_index(d: usize, j: usize, k: usize) -> usize {
    let (a, b) = if j <= k { (j, k) } else { (k, j) };
    a * d - a * a.saturating_sub(1) / 2 + (b - a)
}

/// Pairs `(j, k)` with `j ≤ k` in storage order.
pub fn sym_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(sym_count(d));
    for j in 0..d {
        for k in j..d {
            v.push((j, k));
        }
    }
    v
}

fn sym_weights(d: usize) -> Vec<G> {
    sym_pairs(d).into_iter().map(|(j, k)| if j == k { G::one() } else { G::from_int(2) }).collect()
}

fn sym_labels(prefix: &str, d: usize) -> Vec<String> {
    sym_pairs(d).into_iter().map(|(j, k)| format!("{prefix}{}{}", j + 1, k + 1)).collect()
}

fn two(d: usize, j: usize, k: usize) -> MultiIndex {
    MultiIndex::unit(d, j).add(&MultiIndex::unit(d, k))
}

/// Adds the Hessian-type block `(Q φ)_{jk} = ∂_j∂_k φ − t·δ_{jk} Δφ` with
/// `t = 0` or `1/d`, rows offset by `row0`, input column `col`.
fn hessian_block(q: &mut DiffOperator, row0: usize, col: usize, tracefree: bool) {
    let d = q.d;
    for (s, (j, k)) in sym_pairs(d).into_iter().enumerate() {
        q.add_term(two(d, j, k), row0 + s, col, G::one()).unwrap();
        if tracefree && j == k {
            for l in 0..d {
                q.add_term(two(d, l, l), row0 + s, col, G::ratio(-1, d as i64)).unwrap();
            }
        }
    }
}

/// Adds the Killing-type block `(Q ω)_{jk} = −½(∂_jω_k + ∂_kω_j) + t·δ_{jk}∂_ℓω_ℓ`.
fn killing_block(q: &mut DiffOperator, row0: usize, col0: usize, tracefree: bool) {
    let d = q.d;
    let half = G::ratio(-1, 2);
    for (s, (j, k)) in sym_pairs(d).into_iter().enumerate() {
        q.add_term(MultiIndex::unit(d, j), row0 + s, col0 + k, half.clone()).unwrap();
        q.add_term(MultiIndex::unit(d, k), row0 + s, col0 + j, half.clone()).unwrap();
        if tracefree && j == k {
            for l in 0..d {
                q.add_term(MultiIndex::unit(d, l), row0 + s, col0 + l, G::ratio(1, d as i64)).unwrap();
            }
        }
    }
}

/// The adjoint `P*` of a zoo operator, as an operator in its own right.
pub fn builtin_adjoint(name: &str, d: usize) -> Result<DiffOperator> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownName(name.to_string()))?;
    let min = ZOO.iter().find(|(z, _)| *z == canon).map(|(_, m)| *m).unwrap();
    if d < min {
        return Err(Error::DimensionThreshold { name: canon.to_string(), min, d });
    }
    let n = sym_count(d);
    let vec_labels = |p: &str| (1..=d).map(|j| format!("{p}{j}")).collect::<Vec<_>>();
    let q = match canon {
        "divergence" => {
            let mut q = DiffOperator::new(canon, d, d, 1);
            for j in 0..d {
                q.add_term(MultiIndex::unit(d, j), j, 0, -G::one())?;
            }
            q.out_labels = vec_labels("u");
            q.in_labels = vec!["phi".into()];
            q
        }
        "double_divergence" | "tracefree_double_divergence" => {
            let mut q = DiffOperator::new(canon, d, n, 1);
            hessian_block(&mut q, 0, 0, canon.starts_with("tracefree"));
            q.out_weight = sym_weights(d);
            q.out_labels = sym_labels("h", d);
            q.in_labels = vec!["phi".into()];
            q
        }
        "symmetric_divergence" | "tracefree_symmetric_divergence" => {
            let mut q = DiffOperator::new(canon, d, n, d);
            killing_block(&mut q, 0, 0, canon.starts_with("tracefree"));
            q.out_weight = sym_weights(d);
            q.out_labels = sym_labels("h", d);
            q.in_labels = vec_labels("omega");
            q
        }
        "einstein_constraint" | "einstein_constraint_cmc" => {
            let cmc = canon.ends_with("cmc");
            let mut q = DiffOperator::new(canon, d, 2 * n, 1 + d);
            hessian_block(&mut q, 0, 0, false);
            killing_block(&mut q, n, 1, cmc);
            let mut w = sym_weights(d);
            w.extend(sym_weights(d));
            q.out_weight = w;
            let mut labels = sym_labels("h", d);
            labels.extend(sym_labels("pi", d));
            q.out_labels = labels;
            let mut inl = vec!["phi".to_string()];
            inl.extend(vec_labels("omega"));
            q.in_labels = inl;
            q
        }
        _ => unreachable!("canonical names are exhaustive"),
    };
    Ok(q)
}

/// A zoo operator `P` in dimension `d`.
pub fn builtin(name: &str, d: usize) -> Result<DiffOperator> {
    let mut p = builtin_adjoint(name, d)?.adjoint();
    p.name = canonical_name(name).unwrap().to_string();
    Ok(p)
}
