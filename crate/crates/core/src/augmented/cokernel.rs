//! Closed-form polynomial bases of `ker P*` in flat space.

use num_traits::One;

use crate::diffop::{builtin, canonical_name};
use crate::error::{Error, Result};
use crate::multipoly::{EchelonForm, ExactPoly, GaussianRational, MultiIndex};

type G = GaussianRational;

/// Polynomial fields `Z` (one polynomial per component of `φ`) with `P*Z = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CokernelBasis {
    pub name: String,
    pub d: usize,
    pub labels: Vec<String>,
    pub elements: Vec<Vec<ExactPoly>>,
}

impl CokernelBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// True when `P*Z = 0` holds exactly for every element.
    pub fn annihilated(&self) -> Result<bool> {
        let pstar = builtin(&self.name, self.d)?.adjoint();
        for z in &self.elements {
            if !pstar.apply_exact(z)?.iter().all(|p| p.is_zero()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact rank of the coefficient vectors.
    pub fn rank(&self) -> usize {
        let mut keys: Vec<(usize, MultiIndex)> = Vec::new();
        for z in &self.elements {
            for (j, p) in z.iter().enumerate() {
                for a in p.terms.keys() {
                    if !keys.contains(&(j, a.clone())) {
                        keys.push((j, a.clone()));
                    }
                }
            }
        }
        let rows: Vec<Vec<G>> = self
            .elements
            .iter()
            .map(|z| keys.iter().map(|(j, a)| z[*j].coeff(a)).collect())
            .collect();
        EchelonForm::new(&rows, &[], keys.len()).rank()
    }

    /// Real evaluation of element `a` at `x`.
    pub fn eval(&self, a: usize, x: &[f64]) -> Vec<f64> {
        self.elements[a]
            .iter()
            .map(|p| p.to_real().expect("cokernel bases are real").eval(x))
            .collect()
    }
}

fn x(d: usize, i: usize) -> ExactPoly {
    ExactPoly::coordinate(d, i)
}

fn norm2(d: usize) -> ExactPoly {
    (0..d).fold(ExactPoly::zero(d), |acc, i| acc.add(&x(d, i).mul(&x(d, i))))
}

fn one(d: usize) -> ExactPoly {
    ExactPoly::constant(d, G::one())
}

fn scalar_basis(d: usize, tracefree: bool) -> (Vec<String>, Vec<ExactPoly>) {
    let mut labels = vec!["1".to_string()];
    let mut el = vec![one(d)];
    for i in 0..d {
        labels.push(format!("x{}", i + 1));
        el.push(x(d, i));
    }
    if tracefree {
        labels.push("|x|^2".into());
        el.push(norm2(d));
    }
    (labels, el)
}

fn vector_basis(d: usize, conformal: bool) -> (Vec<String>, Vec<Vec<ExactPoly>>) {
    let zero = || vec![ExactPoly::zero(d); d];
    let mut labels = Vec::new();
    let mut el = Vec::new();
    for j in 0..d {
        let mut v = zero();
        v[j] = one(d);
        labels.push(format!("e{}", j + 1));
        el.push(v);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut v = zero();
            v[j] = x(d, k);
            v[k] = x(d, j).neg();
            labels.push(format!("x{} e{} - x{} e{}", k + 1, j + 1, j + 1, k + 1));
            el.push(v);
        }
    }
    if conformal {
        labels.push("x^j e_j".into());
        el.push((0..d).map(|j| x(d, j)).collect());
        for jj in 0..d {
            let two_xj = x(d, jj).scale(&G::from_int(2));
            let mut v: Vec<ExactPoly> = (0..d).map(|j| two_xj.mul(&x(d, j))).collect();
            v[jj] = v[jj].sub(&norm2(d));
            labels.push(format!("2 x{} x^j e_j - |x|^2 e{}", jj + 1, jj + 1));
            el.push(v);
        }
    }
    (labels, el)
}

/// Flat basis of `ker P*` for a zoo operator. For the Einstein operators this
/// is the basis of the decoupled flat background (Hessian part ⊕ Killing or
/// conformal Killing part).
pub fn cokernel_basis(name: &str, d: usize) -> Result<CokernelBasis> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownName(name.to_string()))?;
    builtin(canon, d)?;
    let (labels, elements): (Vec<String>, Vec<Vec<ExactPoly>>) = match canon {
        "divergence" => (vec!["1".into()], vec![vec![one(d)]]),
        "double_divergence" | "tracefree_double_divergence" => {
            let (l, e) = scalar_basis(d, canon.starts_with("tracefree"));
            (l, e.into_iter().map(|p| vec![p]).collect())
        }
        "symmetric_divergence" | "tracefree_symmetric_divergence" => {
            vector_basis(d, canon.starts_with("tracefree"))
        }
        "einstein_constraint" | "einstein_constraint_cmc" => {
            let (sl, se) = scalar_basis(d, false);
            let (vl, ve) = vector_basis(d, canon.ends_with("cmc"));
            let mut labels: Vec<String> = sl.into_iter().map(|l| format!("phi: {l}")).collect();
            labels.extend(vl.into_iter().map(|l| format!("omega: {l}")));
            let mut el: Vec<Vec<ExactPoly>> = se
                .into_iter()
                .map(|p| {
                    let mut v = vec![p];
                    v.extend(std::iter::repeat_n(ExactPoly::zero(d), d));
                    v
                })
                .collect();
            el.extend(ve.into_iter().map(|w| {
                let mut v = vec![ExactPoly::zero(d)];
                v.extend(w);
                v
            }));
            (labels, el)
        }
        _ => unreachable!(),
    };
    Ok(CokernelBasis { name: canon.to_string(), d, labels, elements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augmented::special_system;

    #[test]
    fn dimensions_match_closed_forms() {
        for d in 2..=3 {
            assert_eq!(cokernel_basis("divergence", d).unwrap().len(), 1);
            assert_eq!(cokernel_basis("double_divergence", d).unwrap().len(), d + 1);
            assert_eq!(cokernel_basis("tracefree_double_divergence", d).unwrap().len(), d + 2);
            assert_eq!(cokernel_basis("symmetric_divergence", d).unwrap().len(), d * (d + 1) / 2);
        }
        assert_eq!(cokernel_basis("conformal_killing", 3).unwrap().len(), 10);
        assert!(cokernel_basis("conformal_killing", 2).is_err());
    }

    #[test]
    fn bases_are_annihilated_independent_and_saturate_the_bound() {
        for &name in crate::augmented::SPECIAL_SYSTEMS {
            for d in 2..=4 {
                let Ok(b) = cokernel_basis(name, d) else { continue };
                assert!(b.annihilated().unwrap(), "{name} d={d}");
                assert_eq!(b.rank(), b.len(), "{name} d={d}");
                assert_eq!(b.len(), special_system(name, d).unwrap().len(), "{name} d={d}");
            }
        }
    }
}
