//! Deciding the finite-cokernel condition: exact certificate search
//! `ξ^α I = g_α(ξ) p*(ξ)` plus a numerical falsifier.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diffop::DiffOperator;
use crate::error::{Error, Result};
use crate::multipoly::{monomial_basis, EchelonForm, GaussianRational, HomPolyMatrix, MultiIndex};

type G = GaussianRational;

/// Principal symbol of `P*`: an `s0 × r0` matrix whose row `K` has degree `m_K`.
pub fn pstar_symbol(p: &DiffOperator) -> HomPolyMatrix {
    p.adjoint().principal_symbol()
}

/// Certificate matrices `g_α` for every `|α| = N0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FcCertificate {
    pub n0: u32,
    pub r0: usize,
    pub s0: usize,
    pub d: usize,
    /// Row degrees `m_K` of the symbol the certificate was built for.
    pub m: Vec<i64>,
    pub g: BTreeMap<MultiIndex, HomPolyMatrix>,
}

/// No certificate exists up to the searched degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotFound {
    pub n0_max: u32,
}

impl std::fmt::Display for NotFound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no certificate with N0 <= {}", self.n0_max)
    }
}

/// Default search cap `max m_K + 4`.
pub fn default_n0_max(pstar: &HomPolyMatrix) -> u32 {
    max_order(pstar) + 4
}

fn max_order(pstar: &HomPolyMatrix) -> u32 {
    pstar.row_offset.iter().copied().max().unwrap_or(0).max(0) as u32
}

/// Searches `N0 = max m_K, …, n0_max` for the smallest certificate.
pub fn find_certificate(pstar: &HomPolyMatrix, n0_max: u32) -> std::result::Result<FcCertificate, NotFound> {
    let start = max_order(pstar);
    for n0 in start..=n0_max {
        if let Some(c) = certificate_at(pstar, n0) {
            return Ok(c);
        }
    }
    Err(NotFound { n0_max })
}

/// Attempts a certificate at exactly degree `n0`.
///
/// All `r0 · #{|α| = n0}` identities share one coefficient matrix: equation
/// `(J', β)` matches the coefficient of `ξ^β` in column `J'` of
/// `Σ_K g[J,K] p*[K,·]`, and unknowns are the coefficients `(K, μ)` of row `J`
/// of `g_α` with `|μ| = n0 − m_K`. Only the right-hand side `e_{(J, α)}`
/// differs, so one elimination serves every `(α, J)`.
pub fn certificate_at(pstar: &HomPolyMatrix, n0: u32) -> Option<FcCertificate> {
    let (r0, d) = (pstar.cols, pstar.d);
    let m: Vec<i64> = pstar.row_offset.clone();
    let targets = monomial_basis(d, n0);
    let eq_index: BTreeMap<(usize, MultiIndex), usize> = (0..r0)
        .flat_map(|j| targets.iter().map(move |b| (j, b.clone())))
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let mut unknowns: Vec<(usize, MultiIndex)> = Vec::new();
    for (k, &mk) in m.iter().enumerate() {
        let deg = n0 as i64 - mk;
        if deg >= 0 {
            for mu in monomial_basis(d, deg as u32) {
                unknowns.push((k, mu));
            }
        }
    }
    let neq = eq_index.len();
    let nun = unknowns.len();
    let mut a = vec![vec![G::zero(); nun]; neq];
    for (col, (k, mu)) in unknowns.iter().enumerate() {
        for (row_k, jp, beta, c) in pstar.iter() {
            if row_k != *k {
                continue;
            }
            let idx = eq_index[&(jp, mu.add(beta))];
            a[idx][col] += c;
        }
    }
    let nrhs = neq;
    let mut b = vec![vec![G::zero(); nrhs]; neq];
    for (i, row) in b.iter_mut().enumerate() {
        row[i] = G::one();
    }
    let ech = EchelonForm::new(&a, &b, nun);
    let mut g = BTreeMap::new();
    for alpha in &targets {
        let mut mat = HomPolyMatrix::with_col_degrees(d, r0, m.iter().map(|mk| n0 as i64 - mk).collect());
        for j in 0..r0 {
            let x = ech.solve_column(eq_index[&(j, alpha.clone())])?;
            for (v, (k, mu)) in x.into_iter().zip(&unknowns) {
                if !v.is_zero() {
                    mat.add_coeff(j, *k, mu.clone(), v).expect("unknown degrees follow the grading");
                }
            }
        }
        g.insert(alpha.clone(), mat);
    }
    Some(FcCertificate { n0, r0, s0: pstar.rows, d, m, g })
}

/// Exact check of `ξ^α I_{r0} = g_α p*` for every stored `α` with `|α| = N0`.
pub fn verify_certificate(cert: &FcCertificate, pstar: &HomPolyMatrix) -> bool {
    if cert.r0 == 0 {
        return true;
    }
    if pstar.rows != cert.s0 || pstar.cols != cert.r0 || pstar.d != cert.d {
        return false;
    }
    let alphas = monomial_basis(cert.d, cert.n0);
    if alphas.len() != cert.g.len() {
        return false;
    }
    for alpha in alphas {
        let Some(g) = cert.g.get(&alpha) else { return false };
        let Ok(prod) = g.mat_mul(pstar) else { return false };
        for j in 0..cert.r0 {
            for jp in 0..cert.r0 {
                let e = prod.entry(j, jp);
                let ok = if j == jp {
                    e.terms.len() == 1 && e.coeff(&alpha).is_one()
                } else {
                    e.is_zero()
                };
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}

impl FcCertificate {
    /// Text dump: header `N0 r0 s0 d`, a `degrees` line with `m_K`, then one
    /// `alpha e1 … ed` line per matrix followed by its monomial lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {} {}\n", self.n0, self.r0, self.s0, self.d);
        s.push_str("degrees");
        for m in &self.m {
            s.push_str(&format!(" {m}"));
        }
        s.push('\n');
        for (alpha, g) in &self.g {
            s.push_str("alpha");
            for e in &alpha.0 {
                s.push_str(&format!(" {e}"));
            }
            s.push('\n');
            s.push_str(&g.to_text());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let perr = |line: usize, msg: &str| Error::ParseAt { line: line + 1, msg: msg.to_string() };
        let (hl, header) = lines.next().ok_or_else(|| Error::Parse("empty certificate".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(hl, "header must be `N0 r0 s0 d`"))?;
        let [n0, r0, s0, d] = h[..] else { return Err(perr(hl, "header must be `N0 r0 s0 d`")) };
        let (dl, deg_line) = lines.next().ok_or_else(|| Error::Parse("missing degrees line".into()))?;
        let mut toks = deg_line.split_whitespace();
        if toks.next() != Some("degrees") {
            return Err(perr(dl, "expected `degrees m1 … ms0`"));
        }
        let m: Vec<i64> = toks
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(dl, "bad degree"))?;
        if m.len() != s0 {
            return Err(perr(dl, "degree count differs from s0"));
        }
        let mut blocks: Vec<(MultiIndex, String)> = Vec::new();
        for (ln, line) in lines {
            let t = line.trim();
            if let Some(rest) = t.strip_prefix("alpha") {
                let e: Vec<u32> = rest
                    .split_whitespace()
                    .map(|x| x.parse::<u32>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| perr(ln, "bad alpha exponent"))?;
                if e.len() != d {
                    return Err(perr(ln, "alpha has the wrong dimension"));
                }
                blocks.push((MultiIndex(e), String::new()));
            } else {
                let Some(last) = blocks.last_mut() else { return Err(perr(ln, "monomial line before any `alpha`")) };
                // Pad with blank lines so nested parse errors report file line numbers.
                while last.1.lines().count() < ln {
                    last.1.push('\n');
                }
                last.1.push_str(t);
                last.1.push('\n');
            }
        }
        let mut g = BTreeMap::new();
        for (alpha, body) in blocks {
            let mat = HomPolyMatrix::from_text(d, vec![0; r0], m.iter().map(|mk| n0 as i64 - mk).collect(), &body)?;
            g.insert(alpha, mat);
        }
        Ok(Self { n0: n0 as u32, r0, s0, d, m, g })
    }
}

/// Evidence that `p*(ξ)` has a kernel at some `ξ ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub xi: Vec<Complex64>,
    pub phi: Vec<Complex64>,
    pub residual: f64,
    /// True when the kernel vector was computed exactly at a Gaussian-rational `ξ`.
    pub exact: bool,
}

/// Outcome of the falsifier: an exact or numerical witness, plus the
/// smallest normalized least singular value observed.
#[derive(Clone, Debug, PartialEq)]
pub struct FalsifyReport {
    pub witness: Option<Witness>,
    pub min_singular: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FcVerdict {
    Certified(FcCertificate),
    Falsified(Witness),
    Inconclusive { n0_max: u32 },
}

fn to_c(v: &G) -> Complex64 {
    v.to_complex()
}

/// Small Gaussian-integer points on coordinate axes and coordinate planes.
fn exact_candidates(d: usize) -> Vec<Vec<G>> {
    let scalars: Vec<G> = [(1, 0), (-1, 0), (0, 1), (0, -1), (2, 0), (-2, 0), (0, 2), (0, -2), (1, 1), (1, -1)]
        .iter()
        .map(|&(a, b)| G::from_ints(a, b))
        .collect();
    let mut out = Vec::new();
    for k in 0..d {
        let mut v = vec![G::zero(); d];
        v[k] = G::one();
        out.push(v);
    }
    for j in 0..d {
        for k in j + 1..d {
            for c in &scalars {
                let mut v = vec![G::zero(); d];
                v[j] = G::one();
                v[k] = c.clone();
                out.push(v);
            }
        }
    }
    out
}

fn least_singular(pstar: &HomPolyMatrix, xi: &[Complex64]) -> (f64, Vec<Complex64>) {
    let m = pstar.eval(xi);
    let n = m.ncols();
    if n == 0 {
        return (f64::INFINITY, Vec::new());
    }
    let rows = m.nrows().max(n);
    let mut sq = DMatrix::from_element(rows, n, Complex64::zero());
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(&m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (idx, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let phi: Vec<Complex64> = (0..n).map(|c| v_t[(idx, c)].conj()).collect();
    (s, phi)
}

/// Looks for `ξ ≠ 0` with a nontrivial kernel of `p*(ξ)`: exact scan of small
/// Gaussian-integer points on coordinate axes and planes, then `trials`
/// random complex unit vectors (numerical, threshold 1e-10).
pub fn falsify_fc(pstar: &HomPolyMatrix, trials: usize, seed: u64) -> FalsifyReport {
    let d = pstar.d;
    let mut min_singular = f64::INFINITY;
    if pstar.cols == 0 {
        return FalsifyReport { witness: None, min_singular };
    }
    for cand in exact_candidates(d) {
        let m = pstar.eval_exact(&cand);
        let ker = crate::multipoly::nullspace(&m, pstar.cols);
        if let Some(v) = ker.into_iter().next() {
            let xi: Vec<Complex64> = cand.iter().map(to_c).collect();
            let mut phi: Vec<Complex64> = v.iter().map(to_c).collect();
            let nrm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            phi.iter_mut().for_each(|z| *z /= nrm);
            let mv = pstar.eval(&xi) * DMatrix::from_column_slice(phi.len(), 1, &phi);
            let residual = mv.norm();
            return FalsifyReport { witness: Some(Witness { xi, phi, residual, exact: true }), min_singular: 0.0 };
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<Complex64>> = (0..trials)
        .map(|_| {
            let mut v: Vec<Complex64> =
                (0..d).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
            v.iter_mut().for_each(|z| *z /= n);
            v
        })
        .collect();
    let results: Vec<(f64, Vec<Complex64>)> = points.par_iter().map(|xi| least_singular(pstar, xi)).collect();
    let mut best: Option<usize> = None;
    for (i, (s, _)) in results.iter().enumerate() {
        if *s < min_singular {
            min_singular = *s;
            best = Some(i);
        }
    }
    let witness = best.filter(|_| min_singular < 1e-10).map(|i| Witness {
        xi: points[i].clone(),
        phi: results[i].1.clone(),
        residual: results[i].0,
        exact: false,
    });
    FalsifyReport { witness, min_singular }
}

/// Certificate search followed, on failure, by the falsifier. Only an exact
/// witness upgrades the verdict to `Falsified`.
pub fn decide_fc(pstar: &HomPolyMatrix, n0_max: u32, trials: usize, seed: u64) -> FcVerdict {
    match find_certificate(pstar, n0_max) {
        Ok(c) => FcVerdict::Certified(c),
        Err(NotFound { n0_max }) => match falsify_fc(pstar, trials, seed).witness {
            Some(w) if w.exact => FcVerdict::Falsified(w),
            _ => FcVerdict::Inconclusive { n0_max },
        },
    }
}
