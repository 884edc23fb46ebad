//! Symbolic toolkit for third-order Hamiltonian evolution equations
//! `u_t = D_x(δH/δu)`: canonical conserved densities, integrability checks,
//! a catalog of integrable Hamiltonians, canonical, reciprocal and hodograph
//! transformations, and a classifier.

pub mod classify;
pub mod densities;
pub mod expr;
pub mod hamiltonian;
pub mod jet;
pub mod syntax;
pub mod transform;

pub use expr::{Expr, ExprError};
