//! Exact arithmetic for multi-indices, Gaussian rationals and matrices of
//! homogeneous polynomials, plus the fraction-free elimination used to solve
//! the certificate systems.

mod gaussian;
mod hom_matrix;
mod linsolve;
mod multi_index;
mod poly;

pub use gaussian::{parse_rational, GaussianRational};
pub use hom_matrix::HomPolyMatrix;
pub use linsolve::{nullspace, solve_many, EchelonForm};
pub use multi_index::{binomial, monomial_basis, multi_indices_up_to, MultiIndex};
pub use poly::{Coeff, ExactPoly, Poly, RealPoly};
