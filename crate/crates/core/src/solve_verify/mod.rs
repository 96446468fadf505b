//! Applying averaged solution operators by quadrature, and numerical checks
//! of the identities they satisfy: weak Green's identity, support
//! containment, cokernel orthogonality and the residual law `P S f − f`.
//!
//! Every singular integral is taken in polar coordinates centred at the
//! singular point, so the `|z|^{m−d}` singularity is absorbed by the
//! Jacobian. Radial panels are split wherever a ray crosses the boundary of
//! a bump's support.

pub mod polar;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::augmented::CokernelBasis;
use crate::averaging::{AveragedKernel, BEta, WeightKind};
use crate::diffop::{DiffOperator, ScalarTestFunction, TestFunction};
use crate::error::{Error, Result};
use crate::multipoly::{MultiIndex, RealPoly};
use polar::{integrate_against, polar_integral, ray_sphere, PolarRule};

/// Truncation level for Gaussian tails when locating supports.
const SUPPORT_EPS: f64 = 1e-18;

/// Quadrature controls shared by the verification routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Resolution of the smooth integrals (moments, `b_η` pairings).
    pub outer_points: usize,
    /// Gauss–Legendre nodes per radial panel around a singular point.
    pub radial: usize,
    /// Angular resolution around a singular point.
    pub angular: usize,
    /// Maximal radial panel length.
    pub patch_radius: f64,
    /// Relative tolerance for adaptive refinement.
    pub tol: f64,
    /// Maximal number of refinement levels.
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { outer_points: 48, radial: 32, angular: 32, patch_radius: 0.2, tol: 1e-10, max_depth: 12 }
    }
}

impl QuadratureSpec {
    /// Polar rule at refinement level `l`: angular count doubled and radial
    /// panels halved `l` times.
    pub fn level(&self, l: usize) -> PolarRule {
        PolarRule {
            angular: self.angular << l,
            radial: self.radial,
            max_panel: self.patch_radius / (1u64 << l) as f64,
        }
    }

    fn outer(&self) -> PolarRule {
        PolarRule { angular: self.outer_points, radial: self.outer_points / 2, max_panel: 4.0 * self.patch_radius }
    }

    /// Repeats `f` on successively refined rules until consecutive results
    /// agree to `tol · max(1, |value|)`.
    pub fn refine<F: Fn(PolarRule) -> Result<Vec<f64>>>(&self, f: F) -> Result<Vec<f64>> {
        let mut prev = f(self.level(0))?;
        let mut achieved = f64::INFINITY;
        for l in 1..=self.max_depth {
            let cur = f(self.level(l))?;
            achieved = prev.iter().zip(&cur).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = cur.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if achieved <= self.tol * scale {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::Tolerance { target: self.tol, achieved })
    }
}

/// Outcome of a numerical check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity: String,
    pub max_residual: f64,
    /// Root-mean-square residual over the samples.
    pub l2_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
    pub oracle: String,
}

impl VerificationReport {
    pub fn from_residuals(identity: &str, oracle: &str, residuals: &[f64], tolerance: f64) -> Self {
        let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let l2_residual = if residuals.is_empty() {
            0.0
        } else {
            (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
        };
        Self {
            identity: identity.into(),
            max_residual,
            l2_residual,
            tolerance,
            samples: residuals.len(),
            passed: max_residual <= tolerance,
            oracle: oracle.into(),
        }
    }
}

fn balls(f: &TestFunction) -> Vec<(Vec<f64>, f64)> {
    (0..f.components()).flat_map(|k| f.comp(k).support_balls(SUPPORT_EPS)).collect()
}

fn ray_breaks(p: &[f64], v: &[f64], balls: &[(Vec<f64>, f64)]) -> (Vec<f64>, f64) {
    let mut pts = Vec::new();
    for (c, r) in balls {
        pts.extend(ray_sphere(p, v, c, *r));
    }
    let tmax = pts.iter().cloned().fold(0.0, f64::max);
    (pts, tmax)
}

fn offset(p: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    p.iter().zip(v).map(|(a, b)| a + t * b).collect()
}

/// `S f(x) = ∫ K(x, y) f(y) dy` with a fixed polar rule around `x`.
pub fn apply_operator_s_with(kernel: &AveragedKernel, f: &TestFunction, x: &[f64], rule: PolarRule) -> Result<Vec<f64>> {
    check_data(kernel, f)?;
    let supp = balls(f);
    polar_integral(
        x,
        rule,
        kernel.rows,
        |th| {
            let back: Vec<f64> = th.iter().map(|v| -v).collect();
            ray_breaks(x, &back, &supp)
        },
        |th, t| {
            let y = offset(x, th, -t);
            let fy = f.eval(&y);
            if fy.iter().all(|v| *v == 0.0) {
                return vec![0.0; kernel.rows];
            }
            let z: Vec<f64> = th.iter().map(|v| t * v).collect();
            let k = kernel.eval_z(&z, &y);
            (k * DVector::from_vec(fy)).iter().copied().collect()
        },
    )
}

/// `S f(x)` refined until the tolerance of `quad` is met.
pub fn apply_operator_s(kernel: &AveragedKernel, f: &TestFunction, x: &[f64], quad: &QuadratureSpec) -> Result<Vec<f64>> {
    if f.is_zero() {
        return Ok(vec![0.0; kernel.rows]);
    }
    quad.refine(|rule| apply_operator_s_with(kernel, f, x, rule))
}

fn check_data(kernel: &AveragedKernel, f: &TestFunction) -> Result<()> {
    if f.components() != kernel.cols || f.d != kernel.d {
        return Err(Error::Shape(format!(
            "kernel expects {} components in d = {}, got {} in d = {}",
            kernel.cols,
            kernel.d,
            f.components(),
            f.d
        )));
    }
    Ok(())
}

/// Terms of the weak Green's identity at one point `y`, per data component `J`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenTerms {
    /// `⟨K(·, y), P*φ⟩_J` (weighted pairing over solution components).
    pub kernel_pairing: Vec<f64>,
    /// `⟨b_η(·, y), φ⟩_J`, zero without a `b_η`.
    pub b_pairing: Vec<f64>,
    pub phi_at_y: Vec<f64>,
}

impl GreenTerms {
    pub fn residual(&self) -> f64 {
        (0..self.phi_at_y.len())
            .map(|j| (self.kernel_pairing[j] + self.b_pairing[j] - self.phi_at_y[j]).abs())
            .fold(0.0, f64::max)
    }
}

/// Both sides of `⟨K(·, y), P*φ⟩ + ⟨b_η(·, y), φ⟩ = φ(y)` with a fixed rule.
pub fn greens_terms(
    kernel: &AveragedKernel,
    pstar: &DiffOperator,
    b: Option<&BEta>,
    phi: &TestFunction,
    y: &[f64],
    rule: PolarRule,
    outer: PolarRule,
) -> Result<GreenTerms> {
    if pstar.r0 != kernel.rows || pstar.s0 != kernel.cols || phi.components() != kernel.cols {
        return Err(Error::Shape("kernel, P* and φ disagree on component counts".into()));
    }
    let psi = pstar.apply(phi)?;
    let w: Vec<f64> = pstar.out_weight.iter().map(|g| g.re_f64()).collect();
    let mut supp = balls(&psi);
    if let WeightKind::Bogovskii { center, radius } = &kernel.weight.kind {
        supp.push((center.clone(), *radius));
    }
    let psi_balls = balls(&psi);
    let kernel_pairing = polar_integral(
        y,
        rule,
        kernel.cols,
        |th| {
            let (pts, _) = ray_breaks(y, th, &supp);
            let (_, tmax) = ray_breaks(y, th, &psi_balls);
            (pts, tmax)
        },
        |th, t| {
            let x = offset(y, th, t);
            let p = psi.eval(&x);
            if p.iter().all(|v| *v == 0.0) {
                return vec![0.0; kernel.cols];
            }
            let z: Vec<f64> = th.iter().map(|v| t * v).collect();
            let k = kernel.eval_z(&z, y);
            (0..kernel.cols).map(|j| (0..kernel.rows).map(|r| w[r] * k[(r, j)] * p[r]).sum()).collect()
        },
    )?;
    let b_pairing = match b {
        None => vec![0.0; kernel.cols],
        Some(b) => {
            let (c, r) = b.support();
            let phi_balls = balls(phi);
            polar_integral(
                c,
                outer,
                kernel.cols,
                |th| (ray_breaks(c, th, &phi_balls).0, r),
                |th, t| {
                    let x = offset(c, th, t);
                    let m = b.eval(&x, y);
                    let p = phi.eval(&x);
                    (m * DVector::from_vec(p)).iter().copied().collect()
                },
            )?
        }
    };
    Ok(GreenTerms { kernel_pairing, b_pairing, phi_at_y: phi.eval(y) })
}

/// `|⟨K(·, y), P*φ⟩ + ⟨b_η(·, y), φ⟩ − φ(y)|` (max over components) at the
/// finest level of `quad` that the refinement loop reaches.
pub fn greens_identity_residual(
    kernel: &AveragedKernel,
    pstar: &DiffOperator,
    b: Option<&BEta>,
    phi: &TestFunction,
    y: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let outer = quad.outer();
    let v = quad.refine(|rule| {
        let t = greens_terms(kernel, pstar, b, phi, y, rule, outer)?;
        Ok(t.kernel_pairing.iter().zip(&t.b_pairing).map(|(a, c)| a + c).collect())
    })?;
    let phi_y = phi.eval(y);
    Ok(v.iter().zip(&phi_y).map(|(a, p)| (a - p).abs()).fold(0.0, f64::max))
}

/// Residuals of the weak Green's identity at refinement levels `0..levels`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub residuals: Vec<f64>,
    /// `residual[l] / residual[l + 1]`.
    pub ratios: Vec<f64>,
}

impl ConvergenceStudy {
    /// Each refinement reduces the residual by at least `factor`, unless the
    /// coarser residual is already at or below `floor`.
    pub fn converges(&self, factor: f64, floor: f64) -> bool {
        self.residuals.windows(2).all(|w| w[0] <= floor || w[0] >= factor * w[1])
    }

    pub fn finest(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }
}

pub fn greens_convergence(
    kernel: &AveragedKernel,
    pstar: &DiffOperator,
    b: Option<&BEta>,
    phi: &TestFunction,
    y: &[f64],
    quad: &QuadratureSpec,
    levels: usize,
) -> Result<ConvergenceStudy> {
    let outer = quad.outer();
    let residuals = (0..levels)
        .map(|l| greens_terms(kernel, pstar, b, phi, y, quad.level(l), outer).map(|t| t.residual()))
        .collect::<Result<Vec<_>>>()?;
    let ratios = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ConvergenceStudy { residuals, ratios })
}

/// Largest `|u|` over the sample points lying outside `region`.
pub fn verify_support<U, R>(identity: &str, u: U, region: R, samples: &[Vec<f64>], tol: f64) -> VerificationReport
where
    U: Fn(&[f64]) -> Vec<f64> + Sync,
    R: Fn(&[f64]) -> bool,
{
    let outside: Vec<&Vec<f64>> = samples.iter().filter(|x| !region(x)).collect();
    let res: Vec<f64> = outside.par_iter().map(|x| u(x).iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect();
    VerificationReport::from_residuals(identity, "kernel support containment", &res, tol)
}

/// `f − Σ_b c_b g_b` whose pairings with every cokernel element vanish. The
/// corrections are `g_b = Z^b · (1 − |x − center|²/radius²)^8_+`, so they live
/// in the chosen ball. `weights` are the pairing weights of the data components.
pub fn project_out_cokernel(
    f: &TestFunction,
    basis: &CokernelBasis,
    weights: &[f64],
    center: &[f64],
    radius: f64,
) -> Result<TestFunction> {
    let n = basis.len();
    let r0 = f.components();
    if n == 0 {
        return Ok(f.clone());
    }
    let zs: Vec<Vec<RealPoly>> = basis
        .elements
        .iter()
        .map(|z| {
            z.iter()
                .map(|p| p.to_real().ok_or_else(|| Error::Unsupported("complex cokernel basis".into())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    if zs.iter().any(|z| z.len() != r0) || weights.len() != r0 {
        return Err(Error::Shape("cokernel basis and data disagree on component count".into()));
    }
    let corrections: Vec<TestFunction> = zs
        .iter()
        .map(|z| {
            let comps =
                z.iter().map(|p| ScalarTestFunction::bump(center, radius, 8, p.shifted(center))).collect::<Vec<_>>();
            TestFunction::from_components(f.d, comps)
        })
        .collect();
    let gram = DMatrix::from_fn(n, n, |a, b| cokernel_moment(&corrections[b], &zs[a], weights).unwrap_or(f64::NAN));
    let rhs = DVector::from_iterator(n, zs.iter().map(|z| cokernel_moment(f, z, weights).unwrap_or(f64::NAN)));
    if gram.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Unsupported("moment quadrature failed".into()));
    }
    let c = gram
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|_| gram.determinant().abs() > 1e-14 * gram.amax().powi(n as i32))
        .ok_or_else(|| Error::Singular("cokernel Gram matrix on the correction ball".into()))?;
    let mut out = f.clone();
    for (g, cb) in corrections.iter().zip(c.iter()) {
        out.add_scaled(g, -cb);
    }
    Ok(out)
}

/// `⟨Z, f⟩ = Σ_J w_J ∫ Z_J f_J`, exact for bump data.
pub fn cokernel_moment(f: &TestFunction, z: &[RealPoly], weights: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (j, p) in z.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let deg = p.max_degree().unwrap_or(0) as usize + 1;
        s += weights[j] * integrate_against(f.comp(j), &|x| p.eval(x), deg)?;
    }
    Ok(s)
}

/// Fourth-order central-difference weights for derivatives of order 0, 1, 2.
fn stencil_1d(order: u32, h: f64) -> Result<Vec<(i32, f64)>> {
    match order {
        0 => Ok(vec![(0, 1.0)]),
        1 => Ok(vec![(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)].into_iter().map(|(k, w)| (k, w / (12.0 * h))).collect()),
        2 => Ok(vec![(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)]
            .into_iter()
            .map(|(k, w)| (k, w / (12.0 * h * h)))
            .collect()),
        _ => Err(Error::Unsupported("finite differences beyond second order per direction".into())),
    }
}

fn stencil(alpha: &MultiIndex, h: f64) -> Result<Vec<(Vec<i32>, f64)>> {
    let mut out = vec![(Vec::new(), 1.0)];
    for &a in &alpha.0 {
        let s = stencil_1d(a, h)?;
        out = out
            .into_iter()
            .flat_map(|(off, w)| {
                s.iter().map(move |(k, v)| {
                    let mut o = off.clone();
                    o.push(*k);
                    (o, w * v)
                })
            })
            .collect();
    }
    Ok(out)
}

/// `(P u)(x)` by fourth-order central differences at steps `h` and `h/2`,
/// combined by one Richardson step. Samples are cached on the `h/2` lattice.
pub fn apply_fd<U: Fn(&[f64]) -> Result<Vec<f64>>>(p: &DiffOperator, u: &U, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let half = h / 2.0;
    let mut cache: HashMap<Vec<i32>, Vec<f64>> = HashMap::new();
    let mut sample = |off: &[i32]| -> Result<Vec<f64>> {
        if let Some(v) = cache.get(off) {
            return Ok(v.clone());
        }
        let pt: Vec<f64> = x.iter().zip(off).map(|(a, o)| a + *o as f64 * half).collect();
        let v = u(&pt)?;
        cache.insert(off.to_vec(), v.clone());
        Ok(v)
    };
    let mut coarse = vec![0.0; p.r0];
    let mut fine = vec![0.0; p.r0];
    for (alpha, j, k, c) in p.terms() {
        let c = c.re_f64();
        for (off, w) in stencil(alpha, h)? {
            let doubled: Vec<i32> = off.iter().map(|o| 2 * o).collect();
            coarse[j] += c * w * sample(&doubled)?[k];
        }
        for (off, w) in stencil(alpha, half)? {
            fine[j] += c * w * sample(&off)?[k];
        }
    }
    Ok(coarse.iter().zip(&fine).map(|(a, b)| (16.0 * b - a) / 15.0).collect())
}

/// `−Σ_J ∫ b_{JJ'}(x, y) f_J(y) dy`, the predicted value of `P S f − f` at `x`.
pub fn predicted_residual(b: &BEta, f: &TestFunction, x: &[f64], extra_degree: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; b.r0];
    for j in 0..f.components() {
        for (jp, o) in out.iter_mut().enumerate() {
            *o -= integrate_against(f.comp(j), &|y| b.eval(x, y)[(j, jp)], extra_degree)?;
        }
    }
    Ok(out)
}

/// Compares the finite-difference `P(S f) − f` with `−∫ b_η(·, y) f(y) dy` on
/// `grid` (with zero when `b` is absent, as for conic kernels). `h` is the
/// difference step and `rule` the polar rule used for `S f`.
#[allow(clippy::too_many_arguments)]
pub fn residual_matches_beta(
    kernel: &AveragedKernel,
    p: &DiffOperator,
    b: Option<&BEta>,
    f: &TestFunction,
    grid: &[Vec<f64>],
    h: f64,
    rule: PolarRule,
    tol: f64,
) -> Result<VerificationReport> {
    let extra = p.orders().into_iter().max().unwrap_or(0) as usize + 4;
    let res = grid
        .par_iter()
        .map(|x| -> Result<f64> {
            let lhs = apply_fd(p, &|pt: &[f64]| apply_operator_s_with(kernel, f, pt, rule), x, h)?;
            let fx = f.eval(x);
            let rhs = match b {
                Some(b) => predicted_residual(b, f, x, extra)?,
                None => vec![0.0; p.r0],
            };
            Ok((0..lhs.len()).map(|j| (lhs[j] - fx[j] - rhs[j]).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(VerificationReport::from_residuals("P(S f) - f = -int b f", "finite differences and b_eta quadrature", &res, tol))
}

#[cfg(test)]
mod tests;
