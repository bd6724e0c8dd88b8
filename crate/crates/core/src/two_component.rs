//! Two-component systems with the symmetric potential
//! `V_s = (2 - |u|² - |v|²)²` and the non-symmetric potential
//! `V_n = V_s + (1 - |u|²)²`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryData;
use crate::error::Result;
use crate::flow::{Flow, Model};
use crate::gl_solver::SolverConfig;
use crate::grid::{ComplexField, Field, Grid};
use crate::reference::{harmonic_lifting, HarmonicLifting, HARMONIC_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Symmetric,
    NonSymmetric,
}

impl Variant {
    pub(crate) fn model(self, epsilon: f64) -> Model {
        Model::pair(epsilon, self == Variant::NonSymmetric)
    }
}

#[derive(Clone, Debug)]
pub struct PairSolution {
    pub u: ComplexField,
    pub v: ComplexField,
    pub epsilon: f64,
    /// Scaled max-norm residual of the `u` and `v` equations.
    pub residuals: (f64, f64),
    pub variant: Variant,
    pub steps_taken: usize,
    pub newton_iterations: usize,
    /// `F_ε(u, v)`.
    pub energy: f64,
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<f64>,
}

impl PairSolution {
    pub fn residual(&self) -> f64 {
        self.residuals.0.max(self.residuals.1)
    }
}

fn stack(u: &ComplexField, v: &ComplexField) -> Result<Vec<Complex64>> {
    u.check_same_grid(v)?;
    let mut z = u.values().to_vec();
    z.extend_from_slice(v.values());
    Ok(z)
}

fn split(grid: &Arc<Grid>, mut z: Vec<Complex64>) -> Result<(ComplexField, ComplexField)> {
    let v = z.split_off(grid.len());
    Ok((Field::from_values(grid, z)?, Field::from_values(grid, v)?))
}

/// `F_ε(u, v) = ½∫(|∇u|² + |∇v|²) + (1/4ε²)∫V`.
pub fn pair_energy(u: &ComplexField, v: &ComplexField, epsilon: f64, variant: Variant) -> Result<f64> {
    let z = stack(u, v)?;
    Ok(Flow::new(u.grid(), variant.model(epsilon)).energy(&z))
}

/// L² gradients of `F_ε` with respect to `u` and `v`, zero on the boundary.
pub fn pair_gradient(
    u: &ComplexField,
    v: &ComplexField,
    epsilon: f64,
    variant: Variant,
) -> Result<(ComplexField, ComplexField)> {
    let z = stack(u, v)?;
    let r = Flow::new(u.grid(), variant.model(epsilon)).residual_field(&z);
    split(u.grid(), r)
}

/// Solves the coupled system from the harmonic maps `(u₀, v₀)`.
pub fn solve_pair(
    g1: &BoundaryData,
    g2: &BoundaryData,
    grid: &Arc<Grid>,
    config: &SolverConfig,
    variant: Variant,
) -> Result<PairSolution> {
    let h1 = harmonic_lifting(g1, grid, HARMONIC_TOL)?;
    let h2 = harmonic_lifting(g2, grid, HARMONIC_TOL)?;
    solve_pair_with((g1, g2), (&h1, &h2), config, variant, None)
}

pub fn solve_pair_with(
    boundary: (&BoundaryData, &BoundaryData),
    reference: (&HarmonicLifting, &HarmonicLifting),
    config: &SolverConfig,
    variant: Variant,
    initial: Option<(&ComplexField, &ComplexField)>,
) -> Result<PairSolution> {
    solve_pair_inner(boundary, reference, config, variant, initial, false)
}

/// As [`solve_pair_with`], also recording `F_ε` after every flow step.
pub fn solve_pair_traced(
    boundary: (&BoundaryData, &BoundaryData),
    reference: (&HarmonicLifting, &HarmonicLifting),
    config: &SolverConfig,
    variant: Variant,
    initial: Option<(&ComplexField, &ComplexField)>,
) -> Result<PairSolution> {
    solve_pair_inner(boundary, reference, config, variant, initial, true)
}

fn solve_pair_inner(
    (g1, g2): (&BoundaryData, &BoundaryData),
    (h1, h2): (&HarmonicLifting, &HarmonicLifting),
    config: &SolverConfig,
    variant: Variant,
    initial: Option<(&ComplexField, &ComplexField)>,
    record_energy: bool,
) -> Result<PairSolution> {
    g1.require_degree_zero()?;
    g2.require_degree_zero()?;
    config.validate()?;
    let grid = h1.u0.grid();
    let (u, v) = initial.unwrap_or((&h1.u0, &h2.u0));
    h1.u0.check_same_grid(u)?;
    let mut z = stack(u, v)?;
    let n = grid.len();
    for ((&b, &s1), &s2) in grid.boundary().iter().zip(g1.samples()).zip(g2.samples()) {
        z[b] = s1;
        z[n + b] = s2;
    }

    let flow = Flow::new(grid, variant.model(config.epsilon));
    let out = flow.run(z, &config.flow_settings(record_energy))?;
    let energy = flow.energy(&out.state);
    let residuals = (out.residuals[0], out.residuals[1]);
    let (u, v) = split(grid, out.state)?;
    Ok(PairSolution {
        u,
        v,
        epsilon: config.epsilon,
        residuals,
        variant,
        steps_taken: out.steps,
        newton_iterations: out.newton_iterations,
        energy,
        residual_history: out.residual_history,
        energy_history: out.energy_history,
    })
}
