#![allow(clippy::needless_range_loop)]

pub mod augmented;
pub mod averaging;
pub mod diffop;
pub mod error;
pub mod fc_cert;
pub mod multipoly;
pub mod ode_kernel;
pub mod quadrature;
pub mod solve_verify;

pub use diffop::{DiffOperator, TestFunction};
pub use error::{Error, Result};
