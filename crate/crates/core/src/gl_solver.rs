//! Single-component Ginzburg–Landau solves.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::flow::{Flow, FlowSettings, Model};
use crate::grid::{ComplexField, Field, Grid};
use crate::reference::{harmonic_lifting, HarmonicLifting, HARMONIC_TOL};

/// Largest step allowed relative to `ε²` with the explicit potential term.
pub const TAU_FACTOR: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub tau: f64,
    pub max_steps: usize,
    pub residual_tol: f64,
    pub newton: bool,
    pub continuation: bool,
}

impl SolverConfig {
    pub fn new(epsilon: f64) -> Self {
        SolverConfig {
            epsilon,
            tau: TAU_FACTOR * epsilon * epsilon,
            max_steps: 20_000,
            residual_tol: 1e-8,
            newton: true,
            continuation: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        let limit = TAU_FACTOR * self.epsilon * self.epsilon;
        if self.tau > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "tau = {} exceeds 0.25 * epsilon^2 = {limit} for epsilon = {}",
                self.tau, self.epsilon
            )));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("residual_tol must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn flow_settings(&self, record_energy: bool) -> FlowSettings {
        FlowSettings {
            tau: self.tau,
            max_steps: self.max_steps,
            residual_tol: self.residual_tol,
            newton: self.newton,
            newton_switch: 1e-2,
            newton_interval: 20,
            record_energy,
        }
    }
}

/// A converged solution of the single-field equation.
#[derive(Clone, Debug)]
pub struct GLSolution {
    pub u: ComplexField,
    pub epsilon: f64,
    /// Max-norm of the discrete equation divided by `1 + 1/ε²`.
    pub residual: f64,
    pub steps_taken: usize,
    pub newton_iterations: usize,
    /// `G_ε(u)`.
    pub energy: f64,
    pub residual_history: Vec<f64>,
    /// `G_ε` after every flow step (only when requested).
    pub energy_history: Vec<f64>,
}

/// `G_ε(u) = ½∫|∇u|² + (1/4ε²)∫(1 - |u|²)²`.
pub fn gl_energy(u: &ComplexField, epsilon: f64) -> f64 {
    Flow::new(u.grid(), Model::single(epsilon)).energy(u.values())
}

/// L² gradient `-Δu - u(1 - |u|²)/ε²`, zero on the boundary.
pub fn energy_gradient(u: &ComplexField, epsilon: f64) -> ComplexField {
    let r = Flow::new(u.grid(), Model::single(epsilon)).residual_field(u.values());
    Field::from_values(u.grid(), r).expect("residual has the grid's length")
}

/// Max-norm over interior nodes of
/// `-Δ(1 - |u|²) + (2/ε²)|u|²(1 - |u|²) - 2|∇u|²`.
pub fn identity_1_7_residual(u: &ComplexField, epsilon: f64) -> f64 {
    modulus_identity_residual(u.grid(), &Model::single(epsilon), u.values())
}

/// Residual of the identity `Δ(Σ|z_k|²) = 2Σ|∇z_k|² - 2 Re Σ z̄_k f_k`
/// satisfied by every solution of the model's equations.
pub(crate) fn modulus_identity_residual(grid: &Grid, model: &Model, z: &[Complex64]) -> f64 {
    let n = grid.len();
    let mut sq = vec![0.0; n];
    let mut grad2 = vec![0.0; n];
    for k in 0..model.ncomp {
        let zk = &z[k * n..(k + 1) * n];
        for (s, v) in sq.iter_mut().zip(zk) {
            *s += v.norm_sqr();
        }
        for (g, d) in grad2.iter_mut().zip(grid.grad_dot_values(zk, zk)) {
            *g += d;
        }
    }
    let mut lap = vec![0.0; n];
    grid.laplacian_into(&sq, &mut lap);
    let mut node = [Complex64::default(); 2];
    let mut force = [Complex64::default(); 2];
    grid.interior()
        .iter()
        .map(|&i| {
            for (k, slot) in node.iter_mut().enumerate().take(model.ncomp) {
                *slot = z[k * n + i];
            }
            model.force(&node, &mut force);
            let work: f64 = (0..model.ncomp)
                .map(|k| node[k].re * force[k].re + node[k].im * force[k].im)
                .sum();
            (lap[i] - 2.0 * grad2[i] + 2.0 * work).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves the single-field equation starting from the harmonic map `u₀`.
pub fn solve_gl(g: &BoundaryData, grid: &Arc<Grid>, config: &SolverConfig) -> Result<GLSolution> {
    g.require_degree_zero()?;
    let reference = harmonic_lifting(g, grid, HARMONIC_TOL)?;
    solve_gl_with(g, &reference, config, None)
}

/// Solves with a precomputed reference lifting and an optional initial guess
/// (whose boundary trace is replaced by `g`).
pub fn solve_gl_with(
    g: &BoundaryData,
    reference: &HarmonicLifting,
    config: &SolverConfig,
    initial: Option<&ComplexField>,
) -> Result<GLSolution> {
    solve_gl_inner(g, reference, config, initial, false)
}

/// As [`solve_gl_with`], also recording `G_ε` after every flow step.
pub fn solve_gl_traced(
    g: &BoundaryData,
    reference: &HarmonicLifting,
    config: &SolverConfig,
    initial: Option<&ComplexField>,
) -> Result<GLSolution> {
    solve_gl_inner(g, reference, config, initial, true)
}

fn solve_gl_inner(
    g: &BoundaryData,
    reference: &HarmonicLifting,
    config: &SolverConfig,
    initial: Option<&ComplexField>,
    record_energy: bool,
) -> Result<GLSolution> {
    g.require_degree_zero()?;
    config.validate()?;
    let grid = reference.u0.grid();
    let mut z = match initial {
        Some(f) => {
            reference.u0.check_same_grid(f)?;
            f.values().to_vec()
        }
        None => reference.u0.values().to_vec(),
    };
    for (&b, &s) in grid.boundary().iter().zip(g.samples()) {
        z[b] = s;
    }

    let flow = Flow::new(grid, Model::single(config.epsilon));
    let out = flow.run(z, &config.flow_settings(record_energy))?;
    let energy = flow.energy(&out.state);
    Ok(GLSolution {
        u: Field::from_values(grid, out.state)?,
        epsilon: config.epsilon,
        residual: out.residuals[0],
        steps_taken: out.steps,
        newton_iterations: out.newton_iterations,
        energy,
        residual_history: out.residual_history,
        energy_history: out.energy_history,
    })
}
