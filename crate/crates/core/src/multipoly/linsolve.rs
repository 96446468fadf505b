//! Fraction-free (Bareiss) elimination over the Gaussian integers.
//!
//! Rows are first scaled to clear denominators, so every intermediate entry
//! stays a Gaussian integer and every Bareiss division is exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::GaussianRational;

type G = GaussianRational;

/// Row-echelon form of an augmented matrix `[A | B]`.
#[derive(Clone, Debug)]
pub struct EchelonForm {
    /// Number of coefficient columns (the width of `A`).
    pub ncols: usize,
    /// Row-echelon rows of `[A | B]`, Gaussian-integer entries.
    pub rows: Vec<Vec<G>>,
    /// Pivot column of each of the first `rank` rows.
    pub pivots: Vec<usize>,
}

impl EchelonForm {
    /// Eliminates `[A | B]`, choosing pivots only among the columns of `A`.
    pub fn new(a: &[Vec<G>], b: &[Vec<G>], ncols: usize) -> Self {
        let nrhs = b.first().map_or(0, |r| r.len());
        let mut m: Vec<Vec<G>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                assert_eq!(row.len(), ncols, "row {i} has the wrong width");
                let mut full = row.clone();
                if nrhs > 0 {
                    full.extend(b[i].iter().cloned());
                }
                clear_denominators(full)
            })
            .collect();
        let width = ncols + nrhs;
        let mut prev = G::one();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == m.len() {
                break;
            }
            let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            let (top, rest) = m.split_at_mut(r + 1);
            let prow = &top[r];
            let piv = prow[c].clone();
            for row in rest.iter_mut() {
                let lead = row[c].clone();
                for j in c + 1..width {
                    let v = &(&piv * &row[j]) - &(&lead * &prow[j]);
                    row[j] = exact_div(&v, &prev);
                }
                row[c] = G::zero();
            }
            prev = piv;
            pivots.push(c);
            r += 1;
        }
        Self { ncols, rows: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Solution for right-hand-side column `k` with free unknowns set to zero,
    /// or `None` when that system is inconsistent.
    pub fn solve_column(&self, k: usize) -> Option<Vec<G>> {
        let col = self.ncols + k;
        let rank = self.rank();
        if self.rows[rank..].iter().any(|row| !row[col].is_zero()) {
            return None;
        }
        let mut x = vec![G::zero(); self.ncols];
        for (i, &pc) in self.pivots.iter().enumerate().rev() {
            let row = &self.rows[i];
            let mut acc = row[col].clone();
            for j in pc + 1..self.ncols {
                if !row[j].is_zero() && !x[j].is_zero() {
                    acc -= &(&row[j] * &x[j]);
                }
            }
            x[pc] = &acc / &row[pc];
        }
        Some(x)
    }

    /// Basis of the right kernel of `A`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<G>> {
        let mut is_pivot = vec![false; self.ncols];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for f in (0..self.ncols).filter(|&c| !is_pivot[c]) {
            let mut x = vec![G::zero(); self.ncols];
            x[f] = G::one();
            for (i, &pc) in self.pivots.iter().enumerate().rev() {
                let row = &self.rows[i];
                let mut acc = G::zero();
                for j in pc + 1..self.ncols {
                    if !row[j].is_zero() && !x[j].is_zero() {
                        acc -= &(&row[j] * &x[j]);
                    }
                }
                x[pc] = &acc / &row[pc];
            }
            basis.push(x);
        }
        basis
    }
}

/// Solves `A x = b_k` for every column `b_k` of `B`; free unknowns are zero.
pub fn solve_many(a: &[Vec<G>], b: &[Vec<G>], ncols: usize) -> Vec<Option<Vec<G>>> {
    let nrhs = b.first().map_or(0, |r| r.len());
    let ech = EchelonForm::new(a, b, ncols);
    (0..nrhs).map(|k| ech.solve_column(k)).collect()
}

/// Exact right kernel of `A`.
pub fn nullspace(a: &[Vec<G>], ncols: usize) -> Vec<Vec<G>> {
    EchelonForm::new(a, &[], ncols).nullspace()
}

fn clear_denominators(row: Vec<G>) -> Vec<G> {
    let mut l = BigInt::one();
    for v in &row {
        l = num_integer::Integer::lcm(&l, &v.denom_lcm());
    }
    if l.is_one() {
        return row;
    }
    let s = G::new(BigRational::from_integer(l), BigRational::zero());
    row.into_iter().map(|v| &v * &s).collect()
}

fn exact_div(a: &G, b: &G) -> G {
    let q = a / b;
    debug_assert!(q.is_gaussian_integer(), "Bareiss division was not exact");
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: i64) -> G {
        G::from_int(n)
    }

    #[test]
    fn solves_square_system() {
        // [2 1; 1 3] x = [3; 5] -> x = [4/5, 7/5]
        let a = vec![vec![g(2), g(1)], vec![g(1), g(3)]];
        let b = vec![vec![g(3)], vec![g(5)]];
        let x = solve_many(&a, &b, 2).pop().unwrap().unwrap();
        assert_eq!(x, vec![G::ratio(4, 5), G::ratio(7, 5)]);
    }

    #[test]
    fn detects_inconsistency() {
        let a = vec![vec![g(1), g(1)], vec![g(2), g(2)]];
        let b = vec![vec![g(1)], vec![g(3)]];
        assert!(solve_many(&a, &b, 2)[0].is_none());
    }

    #[test]
    fn underdetermined_sets_free_to_zero() {
        let a = vec![vec![g(1), g(1), g(1)]];
        let b = vec![vec![g(2)]];
        let x = solve_many(&a, &b, 3).pop().unwrap().unwrap();
        assert_eq!(x, vec![g(2), g(0), g(0)]);
    }

    #[test]
    fn complex_entries_and_fractions() {
        // (i) x = 1  ->  x = -i ; (1/2) y = 1 -> y = 2
        let a = vec![vec![G::i(), g(0)], vec![g(0), G::ratio(1, 2)]];
        let b = vec![vec![g(1)], vec![g(1)]];
        let x = solve_many(&a, &b, 2).pop().unwrap().unwrap();
        assert_eq!(x, vec![-G::i(), g(2)]);
    }

    #[test]
    fn kernel_of_rank_one_matrix() {
        let a = vec![vec![g(1), g(2)], vec![g(2), g(4)]];
        let k = nullspace(&a, 2);
        assert_eq!(k, vec![vec![g(-2), g(1)]]);
    }
}
