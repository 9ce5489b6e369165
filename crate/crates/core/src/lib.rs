//! Finite-difference laboratory for the parabolic thin obstacle problem.
//!
//! The crate discretizes `Q_1 = [-1, 1]^n x (-1, 0]` on a uniform lattice,
//! solves heat and thin obstacle problems with projected SOR, and measures
//! the growth functionals, energy deficits and Holder exponents used to
//! study regularity of solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod certify;
pub mod cli;
pub mod error;
pub mod field;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod solve;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::{Cylinder, Domain, Grid, PPoint, Region};
