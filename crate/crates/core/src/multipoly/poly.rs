//! Sparse multivariate polynomials (not necessarily homogeneous).

use std::collections::BTreeMap;

use num_traits::Zero;

use super::{GaussianRational, MultiIndex};

/// Coefficient ring used by [`Poly`].
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn from_i64(n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl Coeff for GaussianRational {
    fn zero() -> Self {
        <GaussianRational as Zero>::zero()
    }
    fn from_i64(n: i64) -> Self {
        GaussianRational::from_int(n)
    }
    fn is_zero(&self) -> bool {
        <GaussianRational as Zero>::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// `Σ_α c_α x^α` in `d` variables, zero coefficients never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T: Coeff> {
    pub d: usize,
    pub terms: BTreeMap<MultiIndex, T>,
}

pub type ExactPoly = Poly<GaussianRational>;
pub type RealPoly = Poly<f64>;

impl<T: Coeff> Poly<T> {
    pub fn zero(d: usize) -> Self {
        Self { d, terms: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: T) -> Self {
        let mut p = Self::zero(d);
        p.add_term(MultiIndex::zero(d), c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn coordinate(d: usize, i: usize) -> Self {
        let mut p = Self::zero(d);
        p.add_term(MultiIndex::unit(d, i), T::from_i64(1));
        p
    }

    pub fn monomial(alpha: MultiIndex, c: T) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c·x^α`, dropping the entry if it cancels.
    pub fn add_term(&mut self, alpha: MultiIndex, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&alpha) {
            Some(v) => {
                let s = v.add(&c);
                if s.is_zero() {
                    self.terms.remove(&alpha);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (a, c) in &o.terms {
            r.add_term(a.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&T::from_i64(-1))
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut r = Self::zero(self.d);
        for (a, v) in &self.terms {
            r.add_term(a.clone(), v.mul(c));
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero(self.d);
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                r.add_term(a.add(b), x.mul(y));
            }
        }
        r
    }

    /// `∂_i p`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut r = Self::zero(self.d);
        for (a, c) in &self.terms {
            if let Some(b) = a.lowered(i) {
                r.add_term(b, c.mul(&T::from_i64(a.0[i] as i64)));
            }
        }
        r
    }

    /// `∂^α p`.
    pub fn deriv_multi(&self, alpha: &MultiIndex) -> Self {
        let mut r = self.clone();
        for (i, &k) in alpha.0.iter().enumerate() {
            for _ in 0..k {
                r = r.deriv(i);
            }
        }
        r
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.order()).max()
    }

    /// Coefficient of `x^α` (zero when absent).
    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        self.terms.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    /// Composition with the affine shift `x ↦ x + a` for integer or real `a`.
    pub fn shifted(&self, a: &[T]) -> Self {
        let d = self.d;
        let lin: Vec<Self> = (0..d)
            .map(|i| Self::coordinate(d, i).add(&Self::constant(d, a[i].clone())))
            .collect();
        let mut r = Self::zero(d);
        for (alpha, c) in &self.terms {
            let mut t = Self::constant(d, c.clone());
            for (i, &k) in alpha.0.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul(&lin[i]);
                }
            }
            r = r.add(&t);
        }
        r
    }
}

impl ExactPoly {
    pub fn to_real(&self) -> Option<RealPoly> {
        let mut r = RealPoly::zero(self.d);
        for (a, c) in &self.terms {
            if !c.is_real() {
                return None;
            }
            r.add_term(a.clone(), c.re_f64());
        }
        Some(r)
    }

    pub fn eval_exact(&self, x: &[GaussianRational]) -> GaussianRational {
        let mut s = <GaussianRational as Zero>::zero();
        for (a, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in a.0.iter().enumerate() {
                for _ in 0..k {
                    t = &t * &x[i];
                }
            }
            s += &t;
        }
        s
    }
}

impl RealPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, c)| c * a.monomial(x)).sum()
    }
}
