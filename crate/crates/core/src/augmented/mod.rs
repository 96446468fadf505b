//! Graded augmented systems `∂_i Φ_A = (B_i)_A^{A'} Φ_{A'} + (C_i)_A^{(γ,K)} ∂^γ (P*φ)_K`,
//! their curvature, and the flat cokernel bases they bound.

mod cokernel;
mod maximal;
mod special;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::diffop::DiffOperator;
use crate::error::{Error, Result};
use crate::multipoly::{ExactPoly, GaussianRational, MultiIndex};

pub use cokernel::{cokernel_basis, CokernelBasis};
pub use maximal::maximal_from_certificate;
pub use special::{special_system, SPECIAL_SYSTEMS};

type G = GaussianRational;

/// Spatially varying `B_i(x)`, one real `#A × #A` matrix per direction.
pub type BField = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;

/// A first-order system for the augmented variables `Φ_A`.
#[derive(Clone)]
pub struct AugmentedSystem {
    pub name: String,
    pub d: usize,
    pub vars: Vec<String>,
    pub degree: Vec<i64>,
    /// Constant `B_i` entries keyed by `(A, A')`.
    pub b: Vec<BTreeMap<(usize, usize), G>>,
    /// Constant `C_i` entries keyed by `(A, γ, K)`.
    pub c: Vec<BTreeMap<(usize, MultiIndex, usize), G>>,
    /// When present, replaces the constant `B_i`.
    pub b_field: Option<BField>,
    /// The operator `P*` whose output feeds the `C` terms.
    pub pstar: DiffOperator,
    /// `Φ_A = Σ c ∂^α φ_J`, stored as `(α, J, c)` triples.
    pub jets: Vec<Vec<(MultiIndex, usize, G)>>,
    /// For each component `φ_J`, the variable `A` with `Φ_A = φ_J`.
    pub primary: Vec<usize>,
}

impl fmt::Debug for AugmentedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AugmentedSystem")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("vars", &self.vars)
            .field("degree", &self.degree)
            .field("callable_b", &self.b_field.is_some())
            .finish()
    }
}

impl AugmentedSystem {
    pub(crate) fn empty(name: &str, pstar: DiffOperator) -> Self {
        let d = pstar.d;
        Self {
            name: name.to_string(),
            d,
            vars: Vec::new(),
            degree: Vec::new(),
            b: vec![BTreeMap::new(); d],
            c: vec![BTreeMap::new(); d],
            b_field: None,
            primary: vec![usize::MAX; pstar.s0],
            pstar,
            jets: Vec::new(),
        }
    }

    pub(crate) fn push_var(&mut self, label: String, degree: i64, jet: Vec<(MultiIndex, usize, G)>) -> usize {
        self.vars.push(label);
        self.degree.push(degree);
        self.jets.push(jet);
        self.vars.len() - 1
    }

    pub(crate) fn add_b(&mut self, i: usize, a: usize, ap: usize, v: G) {
        let e = self.b[i].entry((a, ap)).or_insert_with(G::zero);
        *e += &v;
        if e.is_zero() {
            self.b[i].remove(&(a, ap));
        }
    }

    pub(crate) fn add_c(&mut self, i: usize, a: usize, gamma: MultiIndex, k: usize, v: G) {
        let key = (a, gamma, k);
        let e = self.c[i].entry(key.clone()).or_insert_with(G::zero);
        *e += &v;
        if e.is_zero() {
            self.c[i].remove(&key);
        }
    }

    /// `#A`.
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Number of components of `φ` (outputs of `P`).
    #[allow(clippy::misnamed_getters)]
    pub fn r0(&self) -> usize {
        self.pstar.s0
    }

    /// `N0 = max |d_A| + 1`.
    pub fn n0(&self) -> u32 {
        self.degree.iter().map(|d| d.unsigned_abs() as u32).max().unwrap_or(0) + 1
    }

    /// Orders `m_K` of the rows of `P*`.
    pub fn m(&self) -> Vec<u32> {
        self.pstar.row_orders()
    }

    /// `m'_K`: highest derivative of `(P*φ)_K` entering any `C_i`.
    pub fn m_prime(&self) -> Vec<u32> {
        let mut mp = vec![0; self.pstar.r0];
        for ci in &self.c {
            for (_, g, k) in ci.keys() {
                mp[*k] = mp[*k].max(g.order());
            }
        }
        mp
    }

    pub fn var_index(&self, label: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == label)
    }

    /// Columns `(γ, K)` that appear in some `C_i`, in sorted order.
    pub fn c_columns(&self) -> Vec<(MultiIndex, usize)> {
        let set: BTreeSet<(MultiIndex, usize)> =
            self.c.iter().flat_map(|ci| ci.keys().map(|(_, g, k)| (g.clone(), *k))).collect();
        set.into_iter().collect()
    }

    /// Real `B_i(x)` for every direction.
    pub fn b_at(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        if let Some(f) = &self.b_field {
            return f(x);
        }
        self.b_const_real()
    }

    /// Real constant `B_i` (ignores any callable field).
    pub fn b_const_real(&self) -> Vec<DMatrix<f64>> {
        let n = self.len();
        self.b
            .iter()
            .map(|bi| {
                let mut m = DMatrix::zeros(n, n);
                for (&(a, ap), v) in bi {
                    m[(a, ap)] = v.re_f64();
                }
                m
            })
            .collect()
    }

    /// Real `C_i` as `#A × cols.len()` matrices over the given columns.
    pub fn c_real(&self, cols: &[(MultiIndex, usize)]) -> Vec<DMatrix<f64>> {
        let pos: BTreeMap<(MultiIndex, usize), usize> =
            cols.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        self.c
            .iter()
            .map(|ci| {
                let mut m = DMatrix::zeros(self.len(), cols.len());
                for ((a, g, k), v) in ci {
                    if let Some(&p) = pos.get(&(g.clone(), *k)) {
                        m[(*a, p)] = v.re_f64();
                    }
                }
                m
            })
            .collect()
    }

    /// True when every `B`, `C` and jet coefficient is real.
    pub fn is_real(&self) -> bool {
        self.b.iter().all(|bi| bi.values().all(|v| v.is_real()))
            && self.c.iter().all(|ci| ci.values().all(|v| v.is_real()))
            && self.jets.iter().all(|j| j.iter().all(|(_, _, v)| v.is_real()))
            && self.pstar.is_real()
    }

    /// True when `B` is constant (no callable field).
    pub fn is_constant(&self) -> bool {
        self.b_field.is_none()
    }

    /// Checks the grading: `B` entries need `d_A ≤ d_{A'} + 1`, `C` entries
    /// need `d_A ≤ −m_K − |γ| + 1`. Returns the first violation.
    pub fn check_grading(&self) -> Result<()> {
        let m = self.m();
        for (i, bi) in self.b.iter().enumerate() {
            for &(a, ap) in bi.keys() {
                if self.degree[a] > self.degree[ap] + 1 {
                    return Err(Error::Invalid(format!(
                        "B_{} entry ({}, {}) violates the grading",
                        i + 1,
                        self.vars[a],
                        self.vars[ap]
                    )));
                }
            }
        }
        for (i, ci) in self.c.iter().enumerate() {
            for (a, g, k) in ci.keys() {
                if self.degree[*a] > -(m[*k] as i64) - g.order() as i64 + 1 {
                    return Err(Error::Invalid(format!(
                        "C_{} entry ({}, {g}, {}) violates the grading",
                        i + 1,
                        self.vars[*a],
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Φ_A` of an exact polynomial field `φ`.
    pub fn phi_exact(&self, phi: &[ExactPoly]) -> Vec<ExactPoly> {
        self.jets
            .iter()
            .map(|jet| {
                jet.iter()
                    .fold(ExactPoly::zero(self.d), |acc, (a, j, c)| acc.add(&phi[*j].deriv_multi(a).scale(c)))
            })
            .collect()
    }

    /// Exact residuals `∂_iΦ_A − B_iΦ − C_i ∂^γ(P*φ)` for a polynomial `φ`;
    /// all zero when the system holds. Constant systems only.
    pub fn residual_exact(&self, phi: &[ExactPoly]) -> Result<Vec<Vec<ExactPoly>>> {
        if !self.is_constant() {
            return Err(Error::Unsupported("exact residuals need constant coefficients".into()));
        }
        let big_phi = self.phi_exact(phi);
        let psi = self.pstar.apply_exact(phi)?;
        let mut out = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let mut res: Vec<ExactPoly> = big_phi.iter().map(|p| p.deriv(i)).collect();
            for (&(a, ap), v) in &self.b[i] {
                res[a] = res[a].sub(&big_phi[ap].scale(v));
            }
            for ((a, g, k), v) in &self.c[i] {
                res[*a] = res[*a].sub(&psi[*k].deriv_multi(g).scale(v));
            }
            out.push(res);
        }
        Ok(out)
    }

    /// Curvature `F_ij = ∂_iB_j − ∂_jB_i + B_jB_i − B_iB_j` at `x`, indexed
    /// `[i][j]`. This is the integrability condition of `∂_iΦ = B_iΦ`.
    /// Spatial derivatives of a callable field use Richardson-extrapolated
    /// central differences.
    pub fn curvature(&self, x: &[f64]) -> Vec<Vec<DMatrix<f64>>> {
        let d = self.d;
        let b = self.b_at(x);
        let db: Vec<Vec<DMatrix<f64>>> = match &self.b_field {
            None => vec![vec![DMatrix::zeros(self.len(), self.len()); d]; d],
            Some(f) => {
                let base = 1e-5 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
                (0..d)
                    .map(|i| {
                        let central = |h: f64| -> Vec<DMatrix<f64>> {
                            let mut xp = x.to_vec();
                            let mut xm = x.to_vec();
                            xp[i] += h;
                            xm[i] -= h;
                            f(&xp).iter().zip(f(&xm)).map(|(p, m)| (p - m) / (2.0 * h)).collect()
                        };
                        let d1 = central(base);
                        let d2 = central(base / 2.0);
                        d1.iter().zip(d2).map(|(a, b)| (&b * 4.0 - a) / 3.0).collect()
                    })
                    .collect()
            }
        };
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| &db[i][j] - &db[j][i] + &b[j] * &b[i] - &b[i] * &b[j])
                    .collect()
            })
            .collect()
    }

    /// Exact curvature of a constant system: the commutators `[B_j, B_i]`.
    pub fn curvature_exact_is_zero(&self) -> bool {
        if !self.is_constant() {
            return false;
        }
        let mul = |x: &BTreeMap<(usize, usize), G>, y: &BTreeMap<(usize, usize), G>| {
            let mut out: BTreeMap<(usize, usize), G> = BTreeMap::new();
            for (&(a, k), u) in x {
                for (&(k2, c), v) in y.range((k, 0)..(k + 1, 0)) {
                    debug_assert_eq!(k, k2);
                    *out.entry((a, c)).or_insert_with(G::zero) += &(u * v);
                }
            }
            out.retain(|_, v| !v.is_zero());
            out
        };
        for i in 0..self.d {
            for j in i + 1..self.d {
                if mul(&self.b[i], &self.b[j]) != mul(&self.b[j], &self.b[i]) {
                    return false;
                }
            }
        }
        true
    }

    /// Structured text dump: variables with degrees, then `B i A A' value`
    /// and `C i A gamma... K value` lines (indices from 1).
    pub fn to_text(&self) -> String {
        let mut s = format!("system {}\ndim {}\nvars {}\n", self.name, self.d, self.len());
        for (a, (v, g)) in self.vars.iter().zip(&self.degree).enumerate() {
            s.push_str(&format!("var {} {} {}\n", a + 1, v, g));
        }
        for (i, bi) in self.b.iter().enumerate() {
            for (&(a, ap), v) in bi {
                s.push_str(&format!("B {} {} {} {}\n", i + 1, a + 1, ap + 1, v));
            }
        }
        for (i, ci) in self.c.iter().enumerate() {
            for ((a, g, k), v) in ci {
                s.push_str(&format!("C {} {}", i + 1, a + 1));
                for e in &g.0 {
                    s.push_str(&format!(" {e}"));
                }
                s.push_str(&format!(" {} {}\n", k + 1, v));
            }
        }
        s
    }
}

/// Outcome of [`is_completely_integrable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrabilityReport {
    pub integrable: bool,
    pub max_curvature: f64,
}

/// Zero-curvature test: exact for constant systems, otherwise the maximum
/// entry of the curvature over the sample points compared with 1e-10.
pub fn is_completely_integrable(sys: &AugmentedSystem, samples: &[Vec<f64>]) -> IntegrabilityReport {
    if sys.is_constant() {
        let zero = sys.curvature_exact_is_zero();
        let max_curvature = if zero {
            0.0
        } else {
            max_curvature(sys, &[vec![0.0; sys.d]])
        };
        return IntegrabilityReport { integrable: zero, max_curvature };
    }
    let mc = max_curvature(sys, samples);
    IntegrabilityReport { integrable: mc <= 1e-10, max_curvature: mc }
}

fn max_curvature(sys: &AugmentedSystem, samples: &[Vec<f64>]) -> f64 {
    samples
        .iter()
        .flat_map(|x| sys.curvature(x).into_iter().flatten())
        .map(|m| m.amax())
        .fold(0.0, f64::max)
}
