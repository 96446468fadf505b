//! Test functions closed under differentiation: finite sums of
//! `poly(x − μ) · envelope(x − μ)` per component.

use crate::error::{Error, Result};
use crate::multipoly::{MultiIndex, RealPoly};

/// Radial envelope of a term, in the local variable `u = x − μ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Envelope {
    /// `exp(−|u|² / (2σ²))`.
    Gaussian { sigma: f64 },
    /// `(1 − |u|²/ρ²)^q` inside the ball of radius `ρ`, zero outside.
    Bump { radius: f64, power: u32 },
}

impl Envelope {
    fn value(&self, r2: f64) -> f64 {
        match *self {
            Envelope::Gaussian { sigma } => (-r2 / (2.0 * sigma * sigma)).exp(),
            Envelope::Bump { radius, power } => {
                let t = 1.0 - r2 / (radius * radius);
                if t <= 0.0 {
                    0.0
                } else {
                    t.powi(power as i32)
                }
            }
        }
    }
}

/// One term `poly(x − center) · envelope(x − center)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub center: Vec<f64>,
    pub envelope: Envelope,
    pub poly: RealPoly,
}

impl Term {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r2: f64 = u.iter().map(|v| v * v).sum();
        let e = self.envelope.value(r2);
        if e == 0.0 {
            return 0.0;
        }
        self.poly.eval(&u) * e
    }

    /// Radius beyond which `|term| < eps` everywhere.
    pub fn radius(&self, eps: f64) -> f64 {
        match self.envelope {
            Envelope::Bump { radius, .. } => radius,
            Envelope::Gaussian { sigma } => {
                let bound = |r: f64| -> f64 {
                    self.poly.terms.iter().map(|(a, c)| c.abs() * r.powi(a.order() as i32)).sum::<f64>()
                        * (-r * r / (2.0 * sigma * sigma)).exp()
                };
                let mut r = sigma;
                // Walk outward until the envelope bound and everything beyond it is below eps.
                while bound(r) >= eps || bound(r * 1.05) >= eps {
                    r *= 1.05;
                    if r > 1e6 * sigma {
                        break;
                    }
                }
                r
            }
        }
    }

    fn deriv(&self, i: usize) -> Result<Vec<Term>> {
        let d = self.center.len();
        let mut out = Vec::new();
        let dp = self.poly.deriv(i);
        let ui = RealPoly::coordinate(d, i);
        match self.envelope {
            Envelope::Gaussian { sigma } => {
                let p = dp.sub(&ui.mul(&self.poly).scale(&(1.0 / (sigma * sigma))));
                out.push(Term { center: self.center.clone(), envelope: self.envelope, poly: p });
            }
            Envelope::Bump { radius, power } => {
                if !dp.is_zero() {
                    out.push(Term { center: self.center.clone(), envelope: self.envelope, poly: dp });
                }
                if !self.poly.is_zero() {
                    if power == 0 {
                        return Err(Error::Unsupported(
                            "bump envelope differentiated beyond its smoothness".into(),
                        ));
                    }
                    let c = -2.0 * power as f64 / (radius * radius);
                    out.push(Term {
                        center: self.center.clone(),
                        envelope: Envelope::Bump { radius, power: power - 1 },
                        poly: ui.mul(&self.poly).scale(&c),
                    });
                }
            }
        }
        Ok(out)
    }
}

/// A scalar test function: a sum of [`Term`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarTestFunction {
    pub d: usize,
    pub terms: Vec<Term>,
}

impl ScalarTestFunction {
    pub fn zero(d: usize) -> Self {
        Self { d, terms: Vec::new() }
    }

    /// `poly(x − μ) exp(−|x − μ|²/(2σ²))`.
    pub fn gaussian(center: &[f64], sigma: f64, poly: RealPoly) -> Self {
        let mut f = Self::zero(center.len());
        f.push(Term { center: center.to_vec(), envelope: Envelope::Gaussian { sigma }, poly });
        f
    }

    /// `poly(x − μ) (1 − |x − μ|²/ρ²)^q_+`.
    pub fn bump(center: &[f64], radius: f64, power: u32, poly: RealPoly) -> Self {
        let mut f = Self::zero(center.len());
        f.push(Term { center: center.to_vec(), envelope: Envelope::Bump { radius, power }, poly });
        f
    }

    /// Adds a term, merging it with an existing term of the same centre and envelope.
    pub fn push(&mut self, t: Term) {
        if t.poly.is_zero() {
            return;
        }
        if let Some(e) = self.terms.iter_mut().find(|e| e.center == t.center && e.envelope == t.envelope) {
            e.poly = e.poly.add(&t.poly);
        } else {
            self.terms.push(t);
        }
        self.terms.retain(|t| !t.poly.is_zero());
    }

    pub fn add_scaled(&mut self, other: &ScalarTestFunction, c: f64) {
        if c == 0.0 {
            return;
        }
        for t in &other.terms {
            self.push(Term { poly: t.poly.scale(&c), ..t.clone() });
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut f = Self::zero(self.d);
        f.add_scaled(self, c);
        f
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Exact `∂_i f`.
    pub fn deriv(&self, i: usize) -> Result<Self> {
        let mut f = Self::zero(self.d);
        for t in &self.terms {
            for nt in t.deriv(i)? {
                f.push(nt);
            }
        }
        Ok(f)
    }

    /// Exact `∂^α f`.
    pub fn deriv_multi(&self, alpha: &MultiIndex) -> Result<Self> {
        let mut f = self.clone();
        for (i, &k) in alpha.0.iter().enumerate() {
            for _ in 0..k {
                f = f.deriv(i)?;
            }
        }
        Ok(f)
    }

    /// Balls `(centre, radius)` outside of which each term is below `eps`.
    pub fn support_balls(&self, eps: f64) -> Vec<(Vec<f64>, f64)> {
        self.terms.iter().map(|t| (t.center.clone(), t.radius(eps))).collect()
    }
}

/// Vector-valued test function, one [`ScalarTestFunction`] per component.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub d: usize,
    comps: Vec<ScalarTestFunction>,
}

impl TestFunction {
    pub fn zero(d: usize, n: usize) -> Self {
        Self { d, comps: vec![ScalarTestFunction::zero(d); n] }
    }

    pub fn from_components(d: usize, comps: Vec<ScalarTestFunction>) -> Self {
        Self { d, comps }
    }

    pub fn scalar(f: ScalarTestFunction) -> Self {
        Self { d: f.d, comps: vec![f] }
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, k: usize) -> &ScalarTestFunction {
        &self.comps[k]
    }

    pub fn comp_mut(&mut self, k: usize) -> &mut ScalarTestFunction {
        &mut self.comps[k]
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn add_scaled(&mut self, other: &TestFunction, c: f64) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.add_scaled(b, c);
        }
    }

    pub fn deriv_multi(&self, alpha: &MultiIndex) -> Result<TestFunction> {
        Ok(TestFunction {
            d: self.d,
            comps: self.comps.iter().map(|c| c.deriv_multi(alpha)).collect::<Result<_>>()?,
        })
    }

    /// Smallest ball (around the mean of the term centres) containing every
    /// term's `eps`-support.
    pub fn bounding_ball(&self, eps: f64) -> (Vec<f64>, f64) {
        let balls: Vec<(Vec<f64>, f64)> = self.comps.iter().flat_map(|c| c.support_balls(eps)).collect();
        if balls.is_empty() {
            return (vec![0.0; self.d], 0.0);
        }
        let mut c = vec![0.0; self.d];
        for (b, _) in &balls {
            for (ci, bi) in c.iter_mut().zip(b) {
                *ci += bi / balls.len() as f64;
            }
        }
        let r = balls
            .iter()
            .map(|(b, r)| b.iter().zip(&c).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() + r)
            .fold(0.0, f64::max);
        (c, r)
    }

    /// Maximum of `|component|` over a set of sample points.
    pub fn max_abs_on(&self, pts: &[Vec<f64>]) -> f64 {
        pts.iter()
            .flat_map(|p| self.eval(p))
            .fold(0.0, |m, v: f64| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &ScalarTestFunction, x: &[f64], i: usize, h: f64) -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f.eval(&xp) - f.eval(&xm)) / (2.0 * h)
    }

    #[test]
    fn gaussian_derivative_matches_fd() {
        let p = RealPoly::coordinate(2, 0).mul(&RealPoly::coordinate(2, 1)).add(&RealPoly::constant(2, 0.5));
        let f = ScalarTestFunction::gaussian(&[0.2, -0.1], 0.7, p);
        let x = [0.5, 0.3];
        for i in 0..2 {
            let exact = f.deriv(i).unwrap().eval(&x);
            assert!((exact - fd(&f, &x, i, 1e-5)).abs() < 1e-8);
        }
    }

    #[test]
    fn bump_derivative_matches_fd() {
        let f = ScalarTestFunction::bump(&[0.0, 0.0], 1.5, 6, RealPoly::coordinate(2, 1));
        let x = [0.4, -0.6];
        for i in 0..2 {
            let exact = f.deriv(i).unwrap().eval(&x);
            assert!((exact - fd(&f, &x, i, 1e-5)).abs() < 1e-8);
        }
        assert_eq!(f.eval(&[2.0, 0.0]), 0.0);
    }

    #[test]
    fn bump_cannot_be_differentiated_past_smoothness() {
        let f = ScalarTestFunction::bump(&[0.0], 1.0, 1, RealPoly::constant(1, 1.0));
        assert!(f.deriv_multi(&MultiIndex(vec![2])).is_err());
    }

    #[test]
    fn gaussian_radius_bounds_tail() {
        let f = ScalarTestFunction::gaussian(&[0.0, 0.0], 0.5, RealPoly::constant(2, 1.0));
        let r = f.support_balls(1e-300)[0].1;
        assert!(f.eval(&[r, 0.0]).abs() < 1e-300);
        assert!(r < 20.0);
    }
}
