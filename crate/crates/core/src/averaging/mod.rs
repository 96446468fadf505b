//! Smooth averaging of curve-supported kernels over a weight, producing
//! locally integrable kernels `K_η(x, y)` and smooth endpoint densities
//! `b_η(x, y)`, plus the published flat formulas used as oracles.
//!
//! For a constant system on segments the rough kernel is
//! `S(y, y1, s) = −exp(−s ẋ·B) ẋ·C` with `ẋ = y1 − y`. Substituting
//! `z = s(y1 − y)` turns the average into `Σ_γ (−1)^{|γ|} ∂_z^γ F_γ(z)` with
//! `F(z) = −E(z) (z·C) H(z)`, where `E(z) = exp(−z·B)` and
//!
//! * Bogovskii: `H(z) = ∫₁^∞ η₁(y + u z) u^{d−1} du = R(z; y)/|z|^d`,
//! * conic: `H(z) = η̸(ẑ)/|z|^d`.
//!
//! `E(z)(z·C)` is polynomial. Derivatives of the Bogovskii `H` are exact
//! (differentiate `η₁` under the integral); conic ones use finite differences.

mod closed_form;
mod fd;
mod weight;

use nalgebra::DMatrix;

use crate::augmented::AugmentedSystem;
use crate::diffop::{builtin, canonical_name, ScalarTestFunction};
use crate::error::{Error, Result};
use crate::multipoly::{binomial, multi_indices_up_to, MultiIndex, RealPoly};
use crate::quadrature;

pub use closed_form::{closed_form_matrix, CLOSED_FORMS};
pub use fd::{base_step, deriv as fd_deriv, deriv_scalar as fd_deriv_scalar};
pub use weight::{sphere_area, Weight, WeightKind, DEFAULT_POWER};

/// Points closer than this to the diagonal are rejected by [`AveragedKernel::eval`].
pub const NEAR_DIAGONAL: f64 = 1e-6;

/// Rows `J` (primary variables) of `exp(−z·B)` as polynomials in `u`, with
/// `z = u + shift`. Fails when the series does not terminate.
pub fn transport_polys(sys: &AugmentedSystem, shift: &[f64]) -> Result<Vec<Vec<RealPoly>>> {
    let d = sys.d;
    let n = sys.len();
    let zc: Vec<RealPoly> =
        (0..d).map(|i| RealPoly::coordinate(d, i).add(&RealPoly::constant(d, shift[i]))).collect();
    let mut m: Vec<(usize, usize, RealPoly)> = Vec::new();
    for (i, bi) in sys.b.iter().enumerate() {
        for (&(a, ap), v) in bi {
            m.push((a, ap, zc[i].scale(&-v.re_f64())));
        }
    }
    let mut rows = Vec::with_capacity(sys.r0());
    for &p in &sys.primary {
        let mut term = vec![RealPoly::zero(d); n];
        term[p] = RealPoly::constant(d, 1.0);
        let mut sum = term.clone();
        let mut done = false;
        for k in 1..=n + 1 {
            let mut next = vec![RealPoly::zero(d); n];
            for (a, ap, q) in &m {
                if !term[*a].is_zero() {
                    next[*ap] = next[*ap].add(&term[*a].mul(q));
                }
            }
            let inv = 1.0 / k as f64;
            term = next.iter().map(|t| t.scale(&inv)).collect();
            if term.iter().all(|t| t.is_zero()) {
                done = true;
                break;
            }
            for (s, t) in sum.iter_mut().zip(&term) {
                *s = s.add(t);
            }
        }
        if !done {
            return Err(Error::Unsupported("transport series of z·B does not terminate".into()));
        }
        rows.push(sum);
    }
    Ok(rows)
}

fn sub_indices(g: &MultiIndex) -> Vec<MultiIndex> {
    multi_indices_up_to(g.dim(), g.order())
        .into_iter()
        .filter(|b| b.0.iter().zip(&g.0).all(|(x, y)| x <= y))
        .collect()
}

fn multi_binomial(g: &MultiIndex, b: &MultiIndex) -> f64 {
    g.0.iter().zip(&b.0).map(|(&x, &y)| binomial(x as u64, y as u64) as f64).product()
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Where a kernel's values come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Backing {
    ClosedForm(String),
    OdeSynthesized(String),
}

#[derive(Clone, Debug)]
struct OdeTerm {
    row: usize,
    coef: f64,
    polys: Vec<RealPoly>,
    delta: usize,
}

#[derive(Clone, Debug)]
struct OdeKernel {
    terms: Vec<OdeTerm>,
    deltas: Vec<MultiIndex>,
    eta_derivs: Vec<ScalarTestFunction>,
    tracefree: bool,
}

#[derive(Clone, Debug)]
enum Imp {
    Closed,
    Ode(Box<OdeKernel>),
}

/// Averaged kernel `K_η(x, y)`, an `rows × cols` matrix (rows index the
/// components of the solution, columns those of the data).
#[derive(Clone, Debug)]
pub struct AveragedKernel {
    pub name: String,
    pub d: usize,
    pub weight: Weight,
    pub backing: Backing,
    pub rows: usize,
    pub cols: usize,
    /// Singular exponent `−d + m_K` per row.
    pub exponents: Vec<i64>,
    imp: Imp,
}

/// The published flat kernel of a classical operator.
pub fn closed_form_kernel(name: &str, weight: &Weight, d: usize) -> Result<AveragedKernel> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownName(name.to_string()))?;
    if !CLOSED_FORMS.contains(&canon) {
        return Err(Error::Unsupported(format!("no closed-form flat kernel for {canon}")));
    }
    if weight.dim() != d {
        return Err(Error::Shape(format!("weight lives in dimension {}, expected {d}", weight.dim())));
    }
    let pstar = builtin(canon, d)?.adjoint();
    Ok(AveragedKernel {
        name: canon.to_string(),
        d,
        weight: weight.clone(),
        backing: Backing::ClosedForm(canon.to_string()),
        rows: pstar.r0,
        cols: pstar.s0,
        exponents: pstar.row_orders().iter().map(|&m| m as i64 - d as i64).collect(),
        imp: Imp::Closed,
    })
}

/// Averages the rough kernels of a constant flat system over a weight:
/// segments for Bogovskii weights, rays for conic ones.
pub fn synthesize_kernel(sys: &AugmentedSystem, weight: &Weight) -> Result<AveragedKernel> {
    if !sys.is_constant() || !sys.is_real() {
        return Err(Error::Unsupported("averaging needs a constant system with real coefficients".into()));
    }
    let d = sys.d;
    if weight.dim() != d {
        return Err(Error::Shape(format!("weight lives in dimension {}, expected {d}", weight.dim())));
    }
    let e = transport_polys(sys, &vec![0.0; d])?;
    let cols = sys.c_columns();
    let zc: Vec<RealPoly> = (0..d).map(|i| RealPoly::coordinate(d, i)).collect();
    // P[J][c] = Σ_A E[J][A] z^i C_i[A][c]
    let mut p = vec![vec![RealPoly::zero(d); cols.len()]; sys.r0()];
    let pos: std::collections::BTreeMap<(MultiIndex, usize), usize> =
        cols.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    for (i, ci) in sys.c.iter().enumerate() {
        for ((a, g, k), v) in ci {
            let c = pos[&(g.clone(), *k)];
            let zv = zc[i].scale(&v.re_f64());
            for (j, row) in e.iter().enumerate() {
                if !row[*a].is_zero() {
                    p[j][c] = p[j][c].add(&row[*a].mul(&zv));
                }
            }
        }
    }
    let weights: Vec<f64> = sys.pstar.out_weight.iter().map(|w| w.re_f64()).collect();
    let mut deltas: Vec<MultiIndex> = Vec::new();
    let mut terms = Vec::new();
    for (c, (g, k)) in cols.iter().enumerate() {
        let sign = if g.order() % 2 == 0 { -1.0 } else { 1.0 };
        for b in sub_indices(g) {
            let delta = g.checked_sub(&b).expect("b ≤ g");
            let di = match deltas.iter().position(|x| *x == delta) {
                Some(i) => i,
                None => {
                    deltas.push(delta);
                    deltas.len() - 1
                }
            };
            let polys: Vec<RealPoly> = p.iter().map(|row| row[c].deriv_multi(&b)).collect();
            if polys.iter().all(|q| q.is_zero()) {
                continue;
            }
            terms.push(OdeTerm { row: *k, coef: sign * multi_binomial(g, &b) / weights[*k], polys, delta: di });
        }
    }
    let eta_derivs = match weight.as_test_function() {
        Some(eta) => deltas.iter().map(|dl| eta.deriv_multi(dl)).collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let base = sys.name.split(':').next().unwrap_or("");
    Ok(AveragedKernel {
        name: sys.name.clone(),
        d,
        weight: weight.clone(),
        backing: Backing::OdeSynthesized(sys.name.clone()),
        rows: sys.pstar.r0,
        cols: sys.r0(),
        exponents: sys.m().iter().map(|&m| m as i64 - d as i64).collect(),
        imp: Imp::Ode(Box::new(OdeKernel { terms, deltas, eta_derivs, tracefree: base.starts_with("tracefree") })),
    })
}

/// One evaluation of the averaged kernel of `sys` at `(x, y)`.
pub fn ode_kernel_average(sys: &AugmentedSystem, weight: &Weight, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    synthesize_kernel(sys, weight)?.eval(x, y)
}

impl AveragedKernel {
    /// `K(x, y)`; rejects `|x − y| < 1e-6`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        if norm(&z) < NEAR_DIAGONAL {
            return Err(Error::OnDiagonal);
        }
        Ok(self.eval_z(&z, y))
    }

    /// `K(y + z, y)` for `z ≠ 0`, without the near-diagonal guard.
    pub fn eval_z(&self, z: &[f64], y: &[f64]) -> DMatrix<f64> {
        let d = self.d;
        if norm(z) == 0.0 {
            return DMatrix::zeros(self.rows, self.cols);
        }
        match &self.imp {
            Imp::Closed => {
                let rho = |w: &[f64]| self.weight.radial_factor(y, w);
                closed_form_matrix(&self.name, d, &rho, z).expect("validated at construction")
            }
            Imp::Ode(k) => {
                let h: Vec<f64> = k.deltas.iter().enumerate().map(|(i, dl)| self.h_deriv(k, i, dl, z, y)).collect();
                let mut out = DMatrix::zeros(self.rows, self.cols);
                for t in &k.terms {
                    if h[t.delta] == 0.0 {
                        continue;
                    }
                    for (j, q) in t.polys.iter().enumerate() {
                        if !q.is_zero() {
                            out[(t.row, j)] += t.coef * q.eval(z) * h[t.delta];
                        }
                    }
                }
                if k.tracefree {
                    project_tracefree(&mut out, d);
                }
                out
            }
        }
    }

    fn h_deriv(&self, k: &OdeKernel, i: usize, delta: &MultiIndex, z: &[f64], y: &[f64]) -> f64 {
        let d = self.d;
        match &self.weight.kind {
            WeightKind::Bogovskii { .. } => {
                let Some((lo, hi)) = self.weight.chord(y, z) else { return 0.0 };
                let lo = lo.max(1.0);
                if hi <= lo {
                    return 0.0;
                }
                let f = &k.eta_derivs[i];
                let pw = delta.order() as i32 + d as i32 - 1;
                let n = self.weight.power as usize + delta.order() as usize + d;
                quadrature::gl(
                    &|u: f64| {
                        let x: Vec<f64> = y.iter().zip(z).map(|(a, b)| a + u * b).collect();
                        u.powi(pw) * f.eval(&x)
                    },
                    lo,
                    hi,
                    n,
                )
            }
            WeightKind::Conic { .. } => {
                let hc = |w: &[f64]| {
                    let r = norm(w);
                    let wh: Vec<f64> = w.iter().map(|v| v / r).collect();
                    self.weight.eta_sphere(&wh) / r.powi(d as i32)
                };
                fd::deriv_scalar(&hc, z, delta, fd::base_step(z))
            }
        }
    }

    /// Frobenius norm of row `k` of `K(y + z, y)`.
    pub fn row_norm(&self, z: &[f64], y: &[f64], k: usize) -> f64 {
        let m = self.eval_z(z, y);
        m.row(k).iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Removes the trace part of each column stored as symmetric pairs.
fn project_tracefree(m: &mut DMatrix<f64>, d: usize) {
    let diag: Vec<usize> = (0..d).map(|i| crate::diffop::sym_index(d, i, i)).collect();
    for c in 0..m.ncols() {
        let tr: f64 = diag.iter().map(|&r| m[(r, c)]).sum();
        for &r in &diag {
            m[(r, c)] -= tr / d as f64;
        }
    }
}

/// Endpoint density `b_η(x, y) = Σ_A Σ_α (−1)^{|α|} ∂_x^α (c[g_A] Z^A(y, x) η₁(x))`
/// for a Bogovskii weight, as an `r0 × r0` matrix: `⟨b_η(·, y), φ⟩_J = ∫ b_{JJ'} φ_{J'}`.
#[derive(Clone, Debug)]
pub struct BEta {
    pub r0: usize,
    terms: Vec<(usize, usize, f64, RealPoly, usize)>,
    eta_derivs: Vec<ScalarTestFunction>,
    support: (Vec<f64>, f64),
}

pub fn b_eta(sys: &AugmentedSystem, weight: &Weight) -> Result<BEta> {
    let WeightKind::Bogovskii { center, radius } = &weight.kind else {
        return Err(Error::Unsupported(
            "b_η is only defined for Bogovskii weights; conic kernels on nontrapping curves have b_η = 0".into(),
        ));
    };
    if !sys.is_constant() || !sys.is_real() {
        return Err(Error::Unsupported("b_η needs a constant system with real coefficients".into()));
    }
    let d = sys.d;
    let e = transport_polys(sys, &vec![0.0; d])?;
    let eta = weight.as_test_function().expect("Bogovskii");
    let mut derivs: Vec<MultiIndex> = Vec::new();
    let mut terms = Vec::new();
    for (a, jet) in sys.jets.iter().enumerate() {
        for (alpha, jp, c) in jet {
            let sign = if alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
            for dl in sub_indices(alpha) {
                let rest = alpha.checked_sub(&dl).expect("dl ≤ alpha");
                let idx = match derivs.iter().position(|x| *x == rest) {
                    Some(i) => i,
                    None => {
                        derivs.push(rest);
                        derivs.len() - 1
                    }
                };
                let coef = sign * c.re_f64() * multi_binomial(alpha, &dl);
                for (j, row) in e.iter().enumerate() {
                    let q = row[a].deriv_multi(&dl);
                    if !q.is_zero() {
                        terms.push((j, *jp, coef, q, idx));
                    }
                }
            }
        }
    }
    let eta_derivs = derivs.iter().map(|dl| eta.deriv_multi(dl)).collect::<Result<Vec<_>>>()?;
    Ok(BEta { r0: sys.r0(), terms, eta_derivs, support: (center.clone(), *radius) })
}

impl BEta {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.r0, self.r0);
        let (c, r) = &self.support;
        let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 >= r * r {
            return out;
        }
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let vals: Vec<f64> = self.eta_derivs.iter().map(|f| f.eval(x)).collect();
        for (j, jp, coef, q, idx) in &self.terms {
            out[(*j, *jp)] += coef * q.eval(&z) * vals[*idx];
        }
        out
    }

    /// Ball containing the `x`-support.
    pub fn support(&self) -> (&[f64], f64) {
        (&self.support.0, self.support.1)
    }
}

/// Published flat `b_η` formulas, evaluated with exact derivatives of `η₁`.
pub fn b_eta_closed_form(name: &str, weight: &Weight, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownName(name.to_string()))?;
    let eta = weight
        .as_test_function()
        .ok_or_else(|| Error::Unsupported("b_η needs a Bogovskii weight".into()))?;
    let d = x.len();
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let e = eta.eval(x);
    let g: Vec<f64> = (0..d).map(|i| eta.deriv(i).map(|f| f.eval(x))).collect::<Result<_>>()?;
    let hess = |i: usize, j: usize| -> Result<f64> { Ok(eta.deriv_multi(&MultiIndex::unit(d, i).raised(j))?.eval(x)) };
    let zg: f64 = z.iter().zip(&g).map(|(a, b)| a * b).sum();
    let z2: f64 = z.iter().map(|v| v * v).sum();
    let df = d as f64;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    match canon {
        "divergence" => Ok(DMatrix::from_element(1, 1, e)),
        "double_divergence" => Ok(DMatrix::from_element(1, 1, (df + 1.0) * e + zg)),
        "tracefree_double_divergence" => {
            let lap: f64 = (0..d).map(|i| hess(i, i)).sum::<Result<f64>>()?;
            // η + ∂_j(z^j η) + (1/2d) Δ(|z|² η)
            let v = e + (df * e + zg) + (2.0 * df * e + 4.0 * zg + z2 * lap) / (2.0 * df);
            Ok(DMatrix::from_element(1, 1, v))
        }
        "symmetric_divergence" => Ok(DMatrix::from_fn(d, d, |k, j| {
            0.5 * (df + 1.0) * e * delta(j, k) + 0.5 * zg * delta(j, k) - 0.5 * z[j] * g[k]
        })),
        "tracefree_symmetric_divergence" => {
            let mut m = DMatrix::zeros(d, d);
            for k in 0..d {
                for j in 0..d {
                    let hjk = hess(j, k)?;
                    // ∂_j (z·∇η) = ∂_j η + z^ℓ ∂_j ∂_ℓ η
                    let mut dzg = g[j];
                    for l in 0..d {
                        dzg += z[l] * hess(j, l)?;
                    }
                    let mut v = e * delta(j, k);
                    v += 0.5 * (df * e + zg) * delta(j, k);
                    v -= 0.5 * (g[k] * z[j] + e * delta(j, k));
                    v += (g[j] * z[k] + e * delta(j, k)) / df;
                    v -= (hjk * z2 + 2.0 * g[k] * z[j] + 2.0 * g[j] * z[k] + 2.0 * e * delta(j, k)) / (2.0 * df);
                    v += (dzg * z[k] + zg * delta(j, k) + (df + 1.0) * (g[j] * z[k] + e * delta(j, k))) / df;
                    m[(k, j)] = v;
                }
            }
            Ok(m)
        }
        _ => Err(Error::Unsupported(format!("no closed-form b_η for {canon}"))),
    }
}

/// Log-log slope of `|K_row(y + tθ, y)|` over `t ∈ [1e-3, 1e-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub row: usize,
    pub slope: f64,
    pub expected: f64,
}

pub fn decay_fit(kernel: &AveragedKernel, y: &[f64], theta: &[f64]) -> Vec<DecayFit> {
    let n = 21;
    let ts: Vec<f64> = (0..n).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / (n - 1) as f64)).collect();
    let mats: Vec<DMatrix<f64>> = ts
        .iter()
        .map(|t| {
            let z: Vec<f64> = theta.iter().map(|v| t * v).collect();
            kernel.eval_z(&z, y)
        })
        .collect();
    (0..kernel.rows)
        .map(|row| {
            let pts: Vec<(f64, f64)> = ts
                .iter()
                .zip(&mats)
                .map(|(t, m)| (t.ln(), m.row(row).iter().map(|v| v * v).sum::<f64>().sqrt().ln()))
                .collect();
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            DecayFit { row, slope: sxy / sxx, expected: kernel.exponents[row] as f64 }
        })
        .collect()
}

/// CSV table of kernel samples: header `x1.. y1.. K_r_c..`, plus `O_r_c..`
/// oracle columns when an oracle kernel is given. Near-diagonal samples are
/// skipped and counted. Returns `(csv, skipped, max oracle discrepancy)`.
pub fn kernel_table_csv(
    kernel: &AveragedKernel,
    points: &[(Vec<f64>, Vec<f64>)],
    oracle: Option<&AveragedKernel>,
) -> Result<(String, usize, f64)> {
    let d = kernel.d;
    let mut head: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    head.extend((1..=d).map(|i| format!("y{i}")));
    for r in 0..kernel.rows {
        for c in 0..kernel.cols {
            head.push(format!("K_{}_{}", r + 1, c + 1));
        }
    }
    if oracle.is_some() {
        for r in 0..kernel.rows {
            for c in 0..kernel.cols {
                head.push(format!("O_{}_{}", r + 1, c + 1));
            }
        }
    }
    let mut out = head.join(",");
    out.push('\n');
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for (x, y) in points {
        let k = match kernel.eval(x, y) {
            Ok(k) => k,
            Err(Error::OnDiagonal) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut row: Vec<String> = x.iter().chain(y).map(|v| format!("{v:e}")).collect();
        for r in 0..kernel.rows {
            for c in 0..kernel.cols {
                row.push(format!("{:e}", k[(r, c)]));
            }
        }
        if let Some(o) = oracle {
            let ko = o.eval(x, y)?;
            let scale = ko.amax().max(k.amax()).max(1e-300);
            worst = worst.max((&k - &ko).amax() / scale);
            for r in 0..kernel.rows {
                for c in 0..kernel.cols {
                    row.push(format!("{:e}", ko[(r, c)]));
                }
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok((out, skipped, worst))
}
