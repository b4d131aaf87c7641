//! Numerical laboratory for exact three-variable Mahler measures.
//!
//! Computes `m(P)` by quadrature, evaluates the dilogarithmic and elliptic
//! right-hand sides independently, and cross-checks boundary, residue and
//! wedge-decomposition formulas numerically.

pub mod error;
pub mod bloch;
pub mod chains;
pub mod elliptic;
pub mod expr;
pub mod forms;
pub mod mahler;
pub mod poly;
pub mod registry;
pub mod specialfn;
pub mod wedge;

pub use error::{Error, Result};
