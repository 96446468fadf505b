//! Linear differential operators with exact Gaussian-rational coefficients,
//! their formal adjoints, principal symbols, and a small zoo of built-ins.

mod operator;
mod testfn;
pub mod zoo;

pub use operator::DiffOperator;
pub use testfn::{Envelope, ScalarTestFunction, Term, TestFunction};
pub use zoo::{builtin, builtin_adjoint, canonical_name, sym_count, sym_index, sym_pairs, ZOO};
