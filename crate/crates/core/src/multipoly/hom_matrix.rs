use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use super::{ExactPoly, GaussianRational, MultiIndex};
use crate::error::{Error, Result};

/// Matrix of homogeneous polynomials over `Q(i)`.
///
/// Entry `(r, c)` is homogeneous of degree `row_offset[r] + col_offset[c]`.
/// A principal symbol uses row offsets `m_K` and zero column offsets; a
/// certificate matrix `g_α` uses zero row offsets and column offsets
/// `N0 − m_K`. Offsets may be negative as long as every stored entry has a
/// nonnegative degree.
#[derive(Clone, Debug, PartialEq)]
pub struct HomPolyMatrix {
    pub rows: usize,
    pub cols: usize,
    pub d: usize,
    pub row_offset: Vec<i64>,
    pub col_offset: Vec<i64>,
    entries: BTreeMap<(usize, usize), ExactPoly>,
}

impl HomPolyMatrix {
    /// Empty matrix whose entry degrees are `row_degree[r]` (row-graded).
    pub fn with_row_degrees(d: usize, row_degree: Vec<i64>, cols: usize) -> Self {
        Self {
            rows: row_degree.len(),
            cols,
            d,
            row_offset: row_degree,
            col_offset: vec![0; cols],
            entries: BTreeMap::new(),
        }
    }

    /// Empty matrix whose entry degrees are `col_degree[c]` (column-graded).
    pub fn with_col_degrees(d: usize, rows: usize, col_degree: Vec<i64>) -> Self {
        Self {
            rows,
            cols: col_degree.len(),
            d,
            row_offset: vec![0; rows],
            col_offset: col_degree,
            entries: BTreeMap::new(),
        }
    }

    pub fn with_offsets(d: usize, row_offset: Vec<i64>, col_offset: Vec<i64>) -> Self {
        Self {
            rows: row_offset.len(),
            cols: col_offset.len(),
            d,
            row_offset,
            col_offset,
            entries: BTreeMap::new(),
        }
    }

    /// Identity matrix graded so that it can left-multiply a matrix whose
    /// rows have degrees `degs` (entry `(k,k)` has degree 0).
    pub fn identity_for(d: usize, degs: &[i64]) -> Self {
        let n = degs.len();
        let mut m = Self::with_offsets(d, degs.to_vec(), degs.iter().map(|x| -x).collect());
        for k in 0..n {
            m.add_coeff(k, k, MultiIndex::zero(d), GaussianRational::from_int(1))
                .expect("identity entries have degree zero");
        }
        m
    }

    pub fn degree(&self, r: usize, c: usize) -> i64 {
        self.row_offset[r] + self.col_offset[c]
    }

    /// Adds `c·ξ^α` to entry `(r, c)`; rejects monomials of the wrong degree.
    pub fn add_coeff(&mut self, r: usize, col: usize, alpha: MultiIndex, c: GaussianRational) -> Result<()> {
        if r >= self.rows || col >= self.cols {
            return Err(Error::Shape(format!("entry ({r}, {col}) outside {}x{}", self.rows, self.cols)));
        }
        if alpha.dim() != self.d {
            return Err(Error::Shape(format!("multi-index {alpha} has dimension {} not {}", alpha.dim(), self.d)));
        }
        if alpha.order() as i64 != self.degree(r, col) {
            return Err(Error::Grading { row: r, col, expected: self.degree(r, col), found: alpha.order() as i64 });
        }
        let d = self.d;
        let e = self.entries.entry((r, col)).or_insert_with(|| ExactPoly::zero(d));
        e.add_term(alpha, c);
        if e.is_zero() {
            self.entries.remove(&(r, col));
        }
        Ok(())
    }

    /// Replaces entry `(r, c)` by `p`, which must be homogeneous of the entry degree.
    pub fn set_entry(&mut self, r: usize, col: usize, p: ExactPoly) -> Result<()> {
        self.entries.remove(&(r, col));
        for (a, c) in p.terms {
            self.add_coeff(r, col, a, c)?;
        }
        Ok(())
    }

    pub fn entry(&self, r: usize, c: usize) -> ExactPoly {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(|| ExactPoly::zero(self.d))
    }

    pub fn entry_ref(&self, r: usize, c: usize) -> Option<&ExactPoly> {
        self.entries.get(&(r, c))
    }

    /// Stored monomials as `(row, col, α, coefficient)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &MultiIndex, &GaussianRational)> {
        self.entries
            .iter()
            .flat_map(|(&(r, c), p)| p.terms.iter().map(move |(a, v)| (r, c, a, v)))
    }

    pub fn nnz(&self) -> usize {
        self.entries.values().map(|p| p.terms.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Matrix product with exact coefficients.
    ///
    /// Every entry of the product must be homogeneous and the entry degrees
    /// must be representable by row and column offsets; otherwise the first
    /// offending `(row, col)` is reported.
    pub fn mat_mul(&self, b: &HomPolyMatrix) -> Result<HomPolyMatrix> {
        if self.cols != b.rows {
            return Err(Error::Shape(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, b.rows, b.cols)));
        }
        let mut prod: BTreeMap<(usize, usize), ExactPoly> = BTreeMap::new();
        let mut deg: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for (&(r, k), p) in &self.entries {
            for c in 0..b.cols {
                let Some(q) = b.entries.get(&(k, c)) else { continue };
                let dd = self.degree(r, k) + b.degree(k, c);
                match deg.get(&(r, c)) {
                    Some(&e) if e != dd => {
                        return Err(Error::Grading { row: r, col: c, expected: e, found: dd });
                    }
                    _ => {
                        deg.insert((r, c), dd);
                    }
                }
                let e = prod.entry((r, c)).or_insert_with(|| ExactPoly::zero(self.d));
                *e = e.add(&p.mul(q));
            }
        }
        prod.retain(|_, p| !p.is_zero());
        let observed: BTreeMap<(usize, usize), i64> =
            prod.keys().map(|key| (*key, deg[key])).collect();
        let (ro, co) = fit_offsets(self.rows, b.cols, &observed, &self.row_offset, &b.col_offset)?;
        let mut out = HomPolyMatrix::with_offsets(self.d, ro, co);
        out.entries = prod;
        Ok(out)
    }

    /// Floating evaluation at a complex point.
    pub fn eval(&self, xi: &[Complex64]) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.rows, self.cols, Complex64::zero());
        for (r, c, a, v) in self.iter() {
            let mut t = v.to_complex();
            for (i, &k) in a.0.iter().enumerate() {
                t *= xi[i].powu(k);
            }
            m[(r, c)] += t;
        }
        m
    }

    /// Exact evaluation at a point with Gaussian-rational coordinates.
    pub fn eval_exact(&self, xi: &[GaussianRational]) -> Vec<Vec<GaussianRational>> {
        let mut m = vec![vec![GaussianRational::zero(); self.cols]; self.rows];
        for (&(r, c), p) in &self.entries {
            m[r][c] = p.eval_exact(xi);
        }
        m
    }

    /// Line-oriented text form: `row col exponents... re_num/re_den im_num/im_den`,
    /// rows and columns numbered from 1.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (r, c, a, v) in self.iter() {
            s.push_str(&format!("{} {}", r + 1, c + 1));
            for e in &a.0 {
                s.push_str(&format!(" {e}"));
            }
            s.push_str(&format!(" {v}\n"));
        }
        s
    }

    /// Reads monomial lines produced by [`to_text`](Self::to_text) into a matrix
    /// with the given grading. Blank lines and `#` comments are skipped.
    pub fn from_text(d: usize, row_offset: Vec<i64>, col_offset: Vec<i64>, text: &str) -> Result<Self> {
        let mut m = Self::with_offsets(d, row_offset, col_offset);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != d + 4 {
                return Err(Error::ParseAt { line: lineno + 1, msg: format!("expected {} tokens, found {}", d + 4, toks.len()) });
            }
            let idx = |t: &str| -> Result<usize> {
                let v: usize = t.parse().map_err(|_| Error::ParseAt { line: lineno + 1, msg: format!("bad index `{t}`") })?;
                v.checked_sub(1).ok_or(Error::ParseAt { line: lineno + 1, msg: "indices start at 1".into() })
            };
            let r = idx(toks[0])?;
            let c = idx(toks[1])?;
            let mut e = Vec::with_capacity(d);
            for t in &toks[2..2 + d] {
                e.push(t.parse::<u32>().map_err(|_| Error::ParseAt { line: lineno + 1, msg: format!("bad exponent `{t}`") })?);
            }
            let v: GaussianRational = format!("{} {}", toks[d + 2], toks[d + 3])
                .parse()
                .map_err(|e: Error| Error::ParseAt { line: lineno + 1, msg: e.to_string() })?;
            m.add_coeff(r, c, MultiIndex(e), v).map_err(|e| Error::ParseAt { line: lineno + 1, msg: e.to_string() })?;
        }
        Ok(m)
    }
}

/// Finds row/column offsets reproducing the observed entry degrees. Rows or
/// columns with no observed entries keep the hint offsets.
fn fit_offsets(
    rows: usize,
    cols: usize,
    observed: &BTreeMap<(usize, usize), i64>,
    row_hint: &[i64],
    col_hint: &[i64],
) -> Result<(Vec<i64>, Vec<i64>)> {
    let mut ro: Vec<Option<i64>> = vec![None; rows];
    let mut co: Vec<Option<i64>> = vec![None; cols];
    let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); rows];
    let mut by_col: Vec<Vec<(usize, i64)>> = vec![Vec::new(); cols];
    for (&(r, c), &dg) in observed {
        by_row[r].push((c, dg));
        by_col[c].push((r, dg));
    }
    for start in 0..rows {
        if ro[start].is_some() || by_row[start].is_empty() {
            continue;
        }
        ro[start] = Some(row_hint[start]);
        let mut queue = VecDeque::from([(true, start)]);
        while let Some((is_row, i)) = queue.pop_front() {
            if is_row {
                let rv = ro[i].unwrap();
                for &(c, dg) in &by_row[i] {
                    match co[c] {
                        None => {
                            co[c] = Some(dg - rv);
                            queue.push_back((false, c));
                        }
                        Some(cv) if cv + rv != dg => {
                            return Err(Error::Grading { row: i, col: c, expected: cv + rv, found: dg });
                        }
                        _ => {}
                    }
                }
            } else {
                let cv = co[i].unwrap();
                for &(r, dg) in &by_col[i] {
                    match ro[r] {
                        None => {
                            ro[r] = Some(dg - cv);
                            queue.push_back((true, r));
                        }
                        Some(rv) if rv + cv != dg => {
                            return Err(Error::Grading { row: r, col: i, expected: rv + cv, found: dg });
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    Ok((
        ro.iter().zip(row_hint).map(|(v, h)| v.unwrap_or(*h)).collect(),
        co.iter().zip(col_hint).map(|(v, h)| v.unwrap_or(*h)).collect(),
    ))
}
