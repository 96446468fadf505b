use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::multipoly::{ExactPoly, GaussianRational, HomPolyMatrix, MultiIndex};

use super::testfn::TestFunction;

type G = GaussianRational;

/// Constant-coefficient matrix differential operator
/// `(P u)^J = Σ_{α,K} c^{(α,J)}_K ∂^α u^K` with `r0` outputs and `s0` inputs.
///
/// Each input and output component carries a pairing weight. The pairing of
/// two fields is `Σ_K w_K ∫ u^K v_K`, so a symmetric 2-tensor stored by its
/// `j ≤ k` components uses weight 2 on the off-diagonal slots and full-index
/// contractions come out right.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOperator {
    pub name: String,
    pub d: usize,
    pub r0: usize,
    pub s0: usize,
    coeff: BTreeMap<(MultiIndex, usize, usize), G>,
    pub out_weight: Vec<G>,
    pub in_weight: Vec<G>,
    pub out_labels: Vec<String>,
    pub in_labels: Vec<String>,
}

impl DiffOperator {
    /// Zero operator with unit weights and default labels.
    pub fn new(name: &str, d: usize, r0: usize, s0: usize) -> Self {
        Self {
            name: name.to_string(),
            d,
            r0,
            s0,
            coeff: BTreeMap::new(),
            out_weight: vec![G::one(); r0],
            in_weight: vec![G::one(); s0],
            out_labels: (1..=r0).map(|j| format!("out{j}")).collect(),
            in_labels: (1..=s0).map(|k| format!("in{k}")).collect(),
        }
    }

    /// Adds `c·∂^α` to the `(J, K)` slot.
    pub fn add_term(&mut self, alpha: MultiIndex, j: usize, k: usize, c: G) -> Result<()> {
        if j >= self.r0 || k >= self.s0 {
            return Err(Error::Shape(format!("term ({j}, {k}) outside {}x{}", self.r0, self.s0)));
        }
        if alpha.dim() != self.d {
            return Err(Error::Shape(format!("multi-index {alpha} is not {}-dimensional", self.d)));
        }
        let key = (alpha, j, k);
        let v = self.coeff.remove(&key).unwrap_or_else(G::zero) + c;
        if !v.is_zero() {
            self.coeff.insert(key, v);
        }
        Ok(())
    }

    pub fn coeff(&self, alpha: &MultiIndex, j: usize, k: usize) -> G {
        self.coeff.get(&(alpha.clone(), j, k)).cloned().unwrap_or_else(G::zero)
    }

    /// Nonzero coefficients as `(α, J, K, c)`.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, usize, usize, &G)> {
        self.coeff.iter().map(|((a, j, k), c)| (a, *j, *k, c))
    }

    /// Per-input orders `m_K` (largest `|α|` acting on input `K`).
    pub fn orders(&self) -> Vec<u32> {
        let mut m = vec![0; self.s0];
        for (a, _, k, _) in self.terms() {
            m[k] = m[k].max(a.order());
        }
        m
    }

    /// Per-output orders (largest `|α|` appearing in output row `J`).
    pub fn row_orders(&self) -> Vec<u32> {
        let mut m = vec![0; self.r0];
        for (a, j, _, _) in self.terms() {
            m[j] = m[j].max(a.order());
        }
        m
    }

    /// Formal adjoint with respect to the weighted pairings:
    /// `c[P*]_K^{(α,J)} = (−1)^{|α|} conj(c[P]^{(α,J)}_K) · v_J / w_K`.
    pub fn adjoint(&self) -> DiffOperator {
        let mut q = DiffOperator {
            name: format!("{}*", self.name),
            d: self.d,
            r0: self.s0,
            s0: self.r0,
            coeff: BTreeMap::new(),
            out_weight: self.in_weight.clone(),
            in_weight: self.out_weight.clone(),
            out_labels: self.in_labels.clone(),
            in_labels: self.out_labels.clone(),
        };
        if let Some(stripped) = self.name.strip_suffix('*') {
            q.name = stripped.to_string();
        }
        for (a, j, k, c) in self.terms() {
            let sign = if a.order() % 2 == 0 { G::one() } else { -G::one() };
            let ratio = &self.out_weight[j] / &self.in_weight[k];
            let v = &(&sign * &c.conj()) * &ratio;
            q.add_term(a.clone(), k, j, v).expect("indices come from a valid operator");
        }
        q
    }

    /// Principal symbol: row `R` (an output) is
    /// `Σ_{|α| = ord_R} c^{(α,R)}_C i^{|α|} ξ^α`, graded by the row order.
    ///
    /// Applied to `P.adjoint()` this is `p*` with row degrees `m_K`.
    pub fn principal_symbol(&self) -> HomPolyMatrix {
        let ord = self.row_orders();
        let mut m = HomPolyMatrix::with_row_degrees(self.d, ord.iter().map(|&o| o as i64).collect(), self.s0);
        for (a, j, k, c) in self.terms() {
            if a.order() == ord[j] {
                let v = c * &G::i_pow(a.order() as i64);
                m.add_coeff(j, k, a.clone(), v).expect("degree matches the row order");
            }
        }
        m
    }

    /// The principal part: terms with `|α| = m_K` for their input `K`.
    pub fn principal_part(&self) -> DiffOperator {
        let m = self.orders();
        let mut p = self.clone();
        p.coeff.retain(|(a, _, k), _| a.order() == m[*k]);
        p
    }

    /// Adds constant lower-order terms `(α, J, K, c)`.
    ///
    /// Each term must have `|α|` below the order `m_K` of the principal part,
    /// so the principal symbol is unchanged.
    pub fn with_lower_order(&self, table: &[(MultiIndex, usize, usize, G)]) -> Result<DiffOperator> {
        let m = self.orders();
        let mut p = self.clone();
        for (a, j, k, c) in table {
            if *k >= self.s0 {
                return Err(Error::Shape(format!("lower-order term references input {k}")));
            }
            if a.order() >= m[*k] {
                return Err(Error::Invalid(format!(
                    "lower-order term with |α| = {} does not lie below m_K = {} for input {}",
                    a.order(),
                    m[*k],
                    k + 1
                )));
            }
            p.add_term(a.clone(), *j, *k, c.clone())?;
        }
        Ok(p)
    }

    /// True when every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.coeff.values().all(|c| c.is_real())
    }

    /// Exact application to polynomial fields (one polynomial per input).
    pub fn apply_exact(&self, u: &[ExactPoly]) -> Result<Vec<ExactPoly>> {
        if u.len() != self.s0 {
            return Err(Error::Shape(format!("expected {} components, got {}", self.s0, u.len())));
        }
        let mut out = vec![ExactPoly::zero(self.d); self.r0];
        for (a, j, k, c) in self.terms() {
            out[j] = out[j].add(&u[k].deriv_multi(a).scale(c));
        }
        Ok(out)
    }

    /// Exact application to a test function (polynomial × envelope terms).
    pub fn apply(&self, f: &TestFunction) -> Result<TestFunction> {
        if f.components() != self.s0 {
            return Err(Error::Shape(format!("expected {} components, got {}", self.s0, f.components())));
        }
        if !self.is_real() {
            return Err(Error::Unsupported("numeric application requires real coefficients".into()));
        }
        let mut out = TestFunction::zero(self.d, self.r0);
        let mut cache: BTreeMap<(usize, MultiIndex), super::testfn::ScalarTestFunction> = BTreeMap::new();
        for (a, j, k, c) in self.terms() {
            let key = (k, a.clone());
            if !cache.contains_key(&key) {
                cache.insert(key.clone(), f.comp(k).deriv_multi(a)?);
            }
            out.comp_mut(j).add_scaled(&cache[&key], c.re_f64());
        }
        Ok(out)
    }

    /// Structured text form: `dim`, `rows`, `cols`, optional weights and
    /// `term J K alpha... re im` lines (components numbered from 1).
    pub fn to_text(&self) -> String {
        let mut s = format!("name {}\ndim {}\nrows {}\ncols {}\n", self.name, self.d, self.r0, self.s0);
        for (j, w) in self.out_weight.iter().enumerate() {
            if !w.is_one() {
                s.push_str(&format!("row_weight {} {}\n", j + 1, w));
            }
        }
        for (k, w) in self.in_weight.iter().enumerate() {
            if !w.is_one() {
                s.push_str(&format!("col_weight {} {}\n", k + 1, w));
            }
        }
        for (a, j, k, c) in self.terms() {
            s.push_str(&format!("term {} {}", j + 1, k + 1));
            for e in &a.0 {
                s.push_str(&format!(" {e}"));
            }
            s.push_str(&format!(" {c}\n"));
        }
        s
    }

    /// Parses the text form written by [`to_text`](Self::to_text). Coefficients
    /// may be written as `re im` rationals/decimals or a single real token.
    pub fn from_text(text: &str) -> Result<DiffOperator> {
        let mut name = String::from("custom");
        let mut dim = None;
        let mut rows = None;
        let mut cols = None;
        let mut terms = Vec::new();
        let mut row_w = Vec::new();
        let mut col_w = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::ParseAt { line: ln + 1, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let int = |t: &str| t.parse::<usize>().map_err(|_| at(format!("expected an integer, found `{t}`")));
            match toks[0] {
                "name" => name = toks.get(1).map(|s| s.to_string()).unwrap_or(name),
                "dim" => dim = Some(int(toks.get(1).copied().unwrap_or(""))?),
                "rows" => rows = Some(int(toks.get(1).copied().unwrap_or(""))?),
                "cols" => cols = Some(int(toks.get(1).copied().unwrap_or(""))?),
                "row_weight" | "col_weight" => {
                    if toks.len() < 3 {
                        return Err(at("weight line needs an index and a value".into()));
                    }
                    let idx = int(toks[1])?.checked_sub(1).ok_or_else(|| at("indices start at 1".into()))?;
                    let v: G = toks[2..].join(" ").parse().map_err(|e: Error| at(e.to_string()))?;
                    if toks[0] == "row_weight" {
                        row_w.push((idx, v));
                    } else {
                        col_w.push((idx, v));
                    }
                }
                "term" => {
                    let d = dim.ok_or_else(|| at("`dim` must precede terms".into()))?;
                    if toks.len() < 3 + d + 1 || toks.len() > 3 + d + 2 {
                        return Err(at(format!("term line needs J K, {d} exponents and a coefficient")));
                    }
                    let j = int(toks[1])?.checked_sub(1).ok_or_else(|| at("indices start at 1".into()))?;
                    let k = int(toks[2])?.checked_sub(1).ok_or_else(|| at("indices start at 1".into()))?;
                    let mut e = Vec::with_capacity(d);
                    for t in &toks[3..3 + d] {
                        e.push(t.parse::<u32>().map_err(|_| at(format!("bad exponent `{t}`")))?);
                    }
                    let c: G = toks[3 + d..].join(" ").parse().map_err(|e: Error| at(e.to_string()))?;
                    terms.push((ln + 1, MultiIndex(e), j, k, c));
                }
                other => return Err(at(format!("unknown keyword `{other}`"))),
            }
        }
        let d = dim.ok_or_else(|| Error::Parse("missing `dim`".into()))?;
        let r0 = rows.ok_or_else(|| Error::Parse("missing `rows`".into()))?;
        let s0 = cols.ok_or_else(|| Error::Parse("missing `cols`".into()))?;
        let mut p = DiffOperator::new(&name, d, r0, s0);
        for (ln, a, j, k, c) in terms {
            p.add_term(a, j, k, c).map_err(|e| Error::ParseAt { line: ln, msg: e.to_string() })?;
        }
        for (j, w) in row_w {
            *p.out_weight.get_mut(j).ok_or_else(|| Error::Parse(format!("row weight index {} out of range", j + 1)))? = w;
        }
        for (k, w) in col_w {
            *p.in_weight.get_mut(k).ok_or_else(|| Error::Parse(format!("col weight index {} out of range", k + 1)))? = w;
        }
        Ok(p)
    }
}
