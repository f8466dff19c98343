//! Tight-binding lattices with synthetic Abelian and non-Abelian gauge
//! fields: model construction, topological invariants, edge spectra and
//! open-system dynamics.

// `!(x > y)` guards are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod bloch;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod invariants;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod ode;
pub mod scenario;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
pub use exec::Execution;
