//! Transport of augmented variables along straight curves: fundamental
//! matrices, curve-supported kernels `K_{y1}`, endpoint data `b_{y1}` and
//! recovery of `φ(y)` from `P*φ` on the segment plus the jet of `φ` at `y1`.

mod radial;

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::augmented::AugmentedSystem;
use crate::diffop::{ScalarTestFunction, TestFunction};
use crate::error::{Error, Result};
use crate::multipoly::{GaussianRational, MultiIndex};
use crate::quadrature;

pub use radial::{curvature_oracle_radial, radial_transport_rk4, GenTrig, RadialOracle};

/// Curve families. A ray is realized as the segment to `y + L ω`.
#[derive(Clone, Debug, PartialEq)]
pub enum Curve {
    Segment,
    Ray { omega: Vec<f64>, length: f64 },
}

impl Curve {
    /// Far endpoint: `y1` itself for segments, `y + Lω` for rays.
    pub fn endpoint(&self, y: &[f64], y1: &[f64]) -> Vec<f64> {
        match self {
            Curve::Segment => y1.to_vec(),
            Curve::Ray { omega, length } => y.iter().zip(omega).map(|(a, w)| a + length * w).collect(),
        }
    }
}

/// `x(s) = y + s (y1 − y)`.
pub fn segment_point(y: &[f64], y1: &[f64], s: f64) -> Vec<f64> {
    y.iter().zip(y1).map(|(a, b)| a + s * (b - a)).collect()
}

fn contract(mats: &[DMatrix<f64>], v: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (m, &c) in mats.iter().zip(v) {
        if c != 0.0 {
            out += m * c;
        }
    }
    out
}

/// `exp(M)` by its power series when `M` is nilpotent (exact termination),
/// otherwise by `nalgebra`'s Padé-based exponential.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=n {
        term = &term * m / k as f64;
        if term.iter().all(|v| *v == 0.0) {
            return sum;
        }
        sum += &term;
    }
    m.clone().exp()
}

/// Tolerance and step limits for the Runge–Kutta fallback.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub tol: f64,
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { tol: 1e-12, min_step: 1e-10 }
    }
}

/// Integrates `Y' = −Y · F(u)` from `u = s` to `u = t` with `Y(s) = I`
/// (classical RK4, step doubling).
fn rk4_right<F: Fn(f64) -> DMatrix<f64>>(f: &F, n: usize, s: f64, t: f64, opts: OdeOptions) -> Result<DMatrix<f64>> {
    let mut y = DMatrix::<f64>::identity(n, n);
    if t <= s {
        return Ok(y);
    }
    let rhs = |u: f64, y: &DMatrix<f64>| -(y * f(u));
    let step = |u: f64, y: &DMatrix<f64>, h: f64| {
        let k1 = rhs(u, y);
        let k2 = rhs(u + h / 2.0, &(y + &k1 * (h / 2.0)));
        let k3 = rhs(u + h / 2.0, &(y + &k2 * (h / 2.0)));
        let k4 = rhs(u + h, &(y + &k3 * h));
        y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let mut u = s;
    let mut h = (t - s) / 16.0;
    while u < t {
        h = h.min(t - u);
        let full = step(u, &y, h);
        let half = step(u + h / 2.0, &step(u, &y, h / 2.0), h / 2.0);
        let err = (&full - &half).amax() / 15.0;
        let scale = half.amax().max(1.0);
        if err <= opts.tol * scale {
            y = &half + (&half - &full) / 15.0;
            u += h;
            if err < opts.tol * scale / 64.0 {
                h *= 2.0;
            }
        } else {
            h /= 2.0;
            if h < opts.min_step {
                return Err(Error::Tolerance { target: opts.tol, achieved: err / scale });
            }
        }
    }
    Ok(y)
}

/// `Π(s, t)` along the segment from `y` to `y1`: the solution of
/// `Π(s,t) = I − ∫_s^t ẋ^i B_i(x(s')) Π(s',t) ds'`. Constant systems use
/// `exp(−(t − s) ẋ^i B_i)`; callable systems use adaptive RK4.
pub fn fundamental_matrix(sys: &AugmentedSystem, y: &[f64], y1: &[f64], s: f64, t: f64) -> Result<DMatrix<f64>> {
    let v: Vec<f64> = y1.iter().zip(y).map(|(a, b)| a - b).collect();
    if sys.is_constant() {
        let m = contract(&sys.b_const_real(), &v);
        return Ok(expm(&(m * (-(t - s)))));
    }
    let f = |u: f64| contract(&sys.b_at(&segment_point(y, y1, u)), &v);
    rk4_right(&f, sys.len(), s, t, OdeOptions::default())
}

/// Exact `Π(0,1)` for a constant system with nilpotent `ẋ^i B_i` and a
/// Gaussian-rational direction. Returns `None` when the series does not terminate.
pub fn endpoint_transport_exact(sys: &AugmentedSystem, dir: &[GaussianRational]) -> Option<Vec<Vec<GaussianRational>>> {
    if !sys.is_constant() {
        return None;
    }
    type G = GaussianRational;
    let n = sys.len();
    let mut m = vec![vec![G::zero(); n]; n];
    for (bi, c) in sys.b.iter().zip(dir) {
        for (&(a, ap), v) in bi {
            m[a][ap] -= &(v * c);
        }
    }
    let mul = |x: &Vec<Vec<G>>, y: &Vec<Vec<G>>| -> Vec<Vec<G>> {
        let mut out = vec![vec![G::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                if x[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !y[k][j].is_zero() {
                        out[i][j] += &(&x[i][k] * &y[k][j]);
                    }
                }
            }
        }
        out
    };
    let mut sum: Vec<Vec<G>> = (0..n).map(|i| (0..n).map(|j| if i == j { G::one() } else { G::zero() }).collect()).collect();
    let mut term = sum.clone();
    for k in 1..=n + 1 {
        term = mul(&term, &m);
        let inv = G::ratio(1, k as i64);
        term.iter_mut().flatten().for_each(|v| *v *= &inv);
        if term.iter().flatten().all(|v| v.is_zero()) {
            return Some(sum);
        }
        for (srow, trow) in sum.iter_mut().zip(&term) {
            for (a, b) in srow.iter_mut().zip(trow) {
                *a += b;
            }
        }
    }
    None
}

/// Augmented variables `Φ_A(x)` of a test function, by exact differentiation.
pub fn phi_values(sys: &AugmentedSystem, phi: &TestFunction, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(sys.len());
    for jet in &sys.jets {
        let mut v = 0.0;
        for (a, j, c) in jet {
            v += c.re_f64() * phi.comp(*j).deriv_multi(a)?.eval(x);
        }
        out.push(v);
    }
    Ok(out)
}

/// The fields `∂^γ (P*φ)_K` for each `C` column `(γ, K)`.
pub fn column_fields(sys: &AugmentedSystem, cols: &[(MultiIndex, usize)], phi: &TestFunction) -> Result<Vec<ScalarTestFunction>> {
    let psi = sys.pstar.apply(phi)?;
    cols.iter().map(|(g, k)| psi.comp(*k).deriv_multi(g)).collect()
}

/// Curve-supported kernel and endpoint data for one pair `(y, y1)`.
#[derive(Clone, Debug)]
pub struct RoughKernel {
    pub y: Vec<f64>,
    pub y1: Vec<f64>,
    /// Columns `(γ, K)` of `S`.
    pub columns: Vec<(MultiIndex, usize)>,
    /// `Z^A_J(y, y1) = Π(0,1)_{J,A}` (rows indexed by components of `φ`).
    pub z: DMatrix<f64>,
    /// `Σ_i ẋ^i C_i`, an `#A × columns` matrix.
    cx: DMatrix<f64>,
    /// `ẋ^i B_i` for constant systems.
    bx: Option<DMatrix<f64>>,
    sys: AugmentedSystem,
}

/// Builds `K_{y1}(·, y)` and `b_{y1}(·, y)` along the segment (or the ray's
/// segment) from `y`.
pub fn rough_kernel(sys: &AugmentedSystem, curve: &Curve, y: &[f64], y1: &[f64]) -> Result<RoughKernel> {
    if !sys.is_real() {
        return Err(Error::Unsupported("numeric transport requires real coefficients".into()));
    }
    let y1 = curve.endpoint(y, y1);
    let v: Vec<f64> = y1.iter().zip(y).map(|(a, b)| a - b).collect();
    let columns = sys.c_columns();
    let cx = contract(&sys.c_real(&columns), &v);
    let bx = sys.is_constant().then(|| contract(&sys.b_const_real(), &v));
    let pi = fundamental_matrix(sys, y, &y1, 0.0, 1.0)?;
    let z = DMatrix::from_fn(sys.r0(), sys.len(), |j, a| pi[(sys.primary[j], a)]);
    Ok(RoughKernel { y: y.to_vec(), y1, columns, z, cx, bx, sys: sys.clone() })
}

impl RoughKernel {
    /// `Π(0, s)`.
    pub fn pi(&self, s: f64) -> Result<DMatrix<f64>> {
        match &self.bx {
            Some(bx) => Ok(expm(&(bx * (-s)))),
            None => fundamental_matrix(&self.sys, &self.y, &self.y1, 0.0, s),
        }
    }

    /// `S_J^{(γ,K)}(s) = −Π_J^A(0,s) ẋ^i (C_i)_A^{(γ,K)}`, shape `r0 × columns`.
    pub fn s_matrix(&self, s: f64) -> Result<DMatrix<f64>> {
        let pi = self.pi(s)?;
        let rows = DMatrix::from_fn(self.sys.r0(), self.sys.len(), |j, a| pi[(self.sys.primary[j], a)]);
        Ok(-(rows * &self.cx))
    }

    pub fn x_at(&self, s: f64) -> Vec<f64> {
        segment_point(&self.y, &self.y1, s)
    }

    /// `⟨K_{y1}, ψ⟩ = ∫₀¹ S(s) · col(x(s)) ds`, where `col(x)` returns the
    /// values of `∂^γ ψ_K` in column order.
    pub fn pair_k<F: Fn(&[f64]) -> Vec<f64>>(&self, col: &F, tol: f64) -> Result<Vec<f64>> {
        let r0 = self.sys.r0();
        if self.columns.is_empty() {
            return Ok(vec![0.0; r0]);
        }
        if let Some(bx) = &self.bx {
            if bx.iter().all(|v| *v == 0.0) {
                // Π ≡ I: only the integral of the column values is needed.
                let rows = DMatrix::from_fn(r0, self.sys.len(), |j, a| if self.sys.primary[j] == a { 1.0 } else { 0.0 });
                let s = -(rows * &self.cx);
                let ncol = self.columns.len();
                let avg = quadrature::adaptive_vec(&|t| col(&self.x_at(t)), 0.0, 1.0, ncol, tol)?;
                return Ok((0..r0).map(|j| (0..ncol).map(|c| s[(j, c)] * avg[c]).sum()).collect());
            }
        }
        let f = |t: f64| -> Vec<f64> {
            let s = self.s_matrix(t).expect("transport on [0,1]");
            let c = col(&self.x_at(t));
            (0..r0).map(|j| (0..c.len()).map(|k| s[(j, k)] * c[k]).sum()).collect()
        };
        quadrature::adaptive_vec(&f, 0.0, 1.0, r0, tol)
    }

    /// `⟨b_{y1}, φ⟩ = Z^A_J Φ_A(y1)`.
    pub fn pair_b(&self, phi_at_y1: &[f64]) -> Vec<f64> {
        let v = DMatrix::from_column_slice(phi_at_y1.len(), 1, phi_at_y1);
        (&self.z * v).iter().copied().collect()
    }

    /// Pairing with a test function: `⟨K, P*φ⟩ + ⟨b, φ⟩`, which equals `φ(y)`.
    pub fn reproduce(&self, phi: &TestFunction, tol: f64) -> Result<Vec<f64>> {
        let fields = column_fields(&self.sys, &self.columns, phi)?;
        let k = self.pair_k(&|x: &[f64]| fields.iter().map(|f| f.eval(x)).collect(), tol)?;
        let b = self.pair_b(&phi_values(&self.sys, phi, &self.y1)?);
        Ok(k.iter().zip(b).map(|(a, b)| a + b).collect())
    }
}

/// Duhamel recovery `Φ(y) = Π(0,1)Φ(y1) − ∫₀¹ Π(0,s) ẋ^i C_i ∂^γψ(x(s)) ds`,
/// returning the `φ` components. `col` supplies `∂^γ (P*φ)_K` along the curve
/// and `phi_at_y1` the augmented variables at the far end.
pub fn recover<F: Fn(&[f64]) -> Vec<f64>>(
    sys: &AugmentedSystem,
    curve: &Curve,
    y: &[f64],
    y1: &[f64],
    col: &F,
    phi_at_y1: &[f64],
) -> Result<Vec<f64>> {
    let k = rough_kernel(sys, curve, y, y1)?;
    let a = k.pair_k(col, 1e-10)?;
    let b = k.pair_b(phi_at_y1);
    Ok(a.iter().zip(b).map(|(a, b)| a + b).collect())
}
