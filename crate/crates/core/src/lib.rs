//! Numerical study of Gaussian-filtered time evolution.
//!
//! The object under study is the postselected step V = e^{-iH dt} e^{-(1/2) s^2 dt^2 H^2}:
//! a unitary step followed by a Gaussian energy filter. `filter` builds and
//! checks it at the operator level, `kernels` looks at its position-space
//! short-time kernel for singular potentials, and `lattice` samples the
//! Euclidean phi^4 + phi^8 action the same smearing induces in field theory.
//! `numerics` and `hamiltonian` are the shared substrate.

// !(x > 0.0) in validations is deliberate: it rejects NaN, x <= 0.0 does not
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filter;
pub mod hamiltonian;
pub mod kernels;
pub mod lattice;
pub mod numerics;

pub use error::{Error, Result};
