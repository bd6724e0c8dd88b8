//! Numerical lab for degree-zero Ginzburg–Landau problems on the unit square
//! and the unit disk.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod diagnostics;
pub mod dump;
pub mod error;
mod flow;
pub mod gl_solver;
pub mod grid;
mod linalg;
pub mod reference;
pub mod runner;
pub mod two_component;

pub use boundary::{boundary_degree, lift_boundary, make_boundary, winding_degree, BoundaryData, BoundarySpec};
pub use error::{Error, Result};
pub use gl_solver::{
    energy_gradient, gl_energy, identity_1_7_residual, solve_gl, solve_gl_with, GLSolution, SolverConfig,
};
pub use grid::{build_grid, ComplexField, DomainKind, Field, Grid, ScalarField};
pub use reference::{alpha_value, harmonic_lifting, minimize_beta, BetaConfig, ConstrainedPair, HarmonicLifting};
pub use two_component::{pair_energy, pair_gradient, solve_pair, solve_pair_with, PairSolution, Variant};
