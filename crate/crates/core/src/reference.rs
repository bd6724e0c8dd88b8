//! Harmonic liftings, the reference maps `u₀ = e^{iφ}`, the value `α` and the
//! constrained minimizer realizing `β`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Field, Grid, ScalarField};
use crate::linalg::{pcg, Stop};

/// Default max-norm tolerance on the discrete Laplacian of a harmonic lifting.
pub const HARMONIC_TOL: f64 = 1e-9;

const HARMONIC_MAX_ITER: usize = 200_000;

/// `φ` with `Δ_h φ = 0` inside and `φ = φ₀` on the boundary, and `u₀ = e^{iφ}`.
#[derive(Clone, Debug)]
pub struct HarmonicLifting {
    pub phi: ScalarField,
    pub u0: ComplexField,
    /// `½ ∫ |∇φ|²`.
    pub energy: f64,
    /// `½ ∫ |∇u₀|²` of the discrete map; this is the value `J_g(u₀)` used
    /// everywhere a reference energy is compared with a complex field.
    pub map_energy: f64,
    /// Max-norm of `Δ_h φ` over interior nodes.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves the discrete Laplace problem with boundary values `phi0` (given in
/// the grid's boundary order).
pub fn solve_harmonic(phi0: &[f64], grid: &Arc<Grid>, tol: f64) -> Result<HarmonicLifting> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("harmonic tolerance must be positive, got {tol}")));
    }
    if phi0.len() != grid.boundary().len() {
        return Err(Error::Shape {
            expected: grid.boundary().len(),
            found: phi0.len(),
        });
    }
    let n = grid.len();
    let mut phi = vec![0.0; n];
    for (&b, &p) in grid.boundary().iter().zip(phi0) {
        phi[b] = p;
    }

    let mut k_phi = vec![0.0; n];
    grid.stiffness_apply(&phi, &mut k_phi);
    let rhs: Vec<f64> = k_phi.iter().map(|v| -v).collect();
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            if grid.is_boundary(i) {
                0.0
            } else {
                1.0 / grid.weight_sums()[i]
            }
        })
        .collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            if grid.is_boundary(i) {
                0.0
            } else {
                1.0 / grid.areas()[i]
            }
        })
        .collect();
    let mut delta = vec![0.0; n];
    let stats = pcg(
        |x, out| grid.stiffness_apply(x, out),
        &inv_diag,
        &rhs,
        &mut delta,
        Stop::WeightedMax { weights: &weights, tol },
        HARMONIC_MAX_ITER,
    )
    .expect("Dirichlet Laplacian is positive definite");
    for (p, d) in phi.iter_mut().zip(&delta) {
        *p += d;
    }
    if !stats.converged {
        return Err(Error::NotConverged {
            steps: stats.iterations,
            residual: stats.residual,
            history: stats.history,
        });
    }

    let phi = Field::from_values(grid, phi)?;
    let lap = crate::grid::laplacian(&phi);
    let residual = lap.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let u0 = phi.map(|p| Complex64::from_polar(1.0, p));
    let energy = grid.dirichlet_sum(phi.values());
    let map_energy = grid.dirichlet_sum(u0.values());
    Ok(HarmonicLifting {
        phi,
        u0,
        energy,
        map_energy,
        residual,
        iterations: stats.iterations,
    })
}

/// Harmonic lifting of degree-zero boundary data; the boundary trace of `u₀`
/// is set to the samples of `g` exactly.
pub fn harmonic_lifting(g: &BoundaryData, grid: &Arc<Grid>, tol: f64) -> Result<HarmonicLifting> {
    let phi0 = g.require_degree_zero()?;
    let mut h = solve_harmonic(phi0, grid, tol)?;
    let u0 = h.u0.values_mut();
    for (&b, &s) in grid.boundary().iter().zip(g.samples()) {
        u0[b] = s;
    }
    h.map_energy = grid.dirichlet_sum(h.u0.values());
    Ok(h)
}

/// `α(g₁, g₂) = J_{g₁}(u₀) + J_{g₂}(v₀)`.
pub fn alpha_value(h1: &HarmonicLifting, h2: &HarmonicLifting) -> Result<f64> {
    h1.u0.check_same_grid(&h2.u0)?;
    Ok(h1.map_energy + h2.map_energy)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaConfig {
    /// Stop once an accepted step lowers `I` by less than `tol · max(1, I)`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Initial and maximal step of the preconditioned gradient step.
    pub initial_step: f64,
    pub max_step: f64,
    pub harmonic_tol: f64,
}

impl Default for BetaConfig {
    fn default() -> Self {
        BetaConfig {
            tol: 1e-12,
            max_iterations: 50_000,
            initial_step: 1e-2,
            max_step: 1.0,
            harmonic_tol: HARMONIC_TOL,
        }
    }
}

/// A minimizer candidate for `I` over pairs with `|u|² + |v|² = 2`.
/// Uniqueness is not known, so only the achieved value is meaningful.
#[derive(Clone, Debug)]
pub struct ConstrainedPair {
    pub u_star: ComplexField,
    pub v_star: ComplexField,
    pub beta_value: f64,
    pub constraint_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `I` after every accepted step, starting with `I(u₀, v₀)`.
    pub history: Vec<f64>,
}

const PROJECTION_FLOOR: f64 = 1e-6;
const DESCENT_SLACK: f64 = 1e-12;

fn project(grid: &Grid, u: &mut [Complex64], v: &mut [Complex64]) -> Result<()> {
    let radius = 2f64.sqrt();
    for &i in grid.interior() {
        let m = (u[i].norm_sqr() + v[i].norm_sqr()).sqrt();
        if m < PROJECTION_FLOOR {
            return Err(Error::ProjectionSingularity { node: i, modulus: m });
        }
        let s = radius / m;
        u[i] *= s;
        v[i] *= s;
    }
    Ok(())
}

fn constraint_violation(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 2.0).abs())
        .fold(0.0, f64::max)
}

/// Implicit-Laplacian smoothing step `(I - τΔ) w = z` with Dirichlet data.
fn smooth(grid: &Grid, z: &[Complex64], tau: f64) -> Vec<Complex64> {
    let n = grid.len();
    let areas = grid.areas();
    let mut scratch = vec![Complex64::default(); n];
    grid.shifted_apply(1.0, tau, z, &mut scratch);
    let b: Vec<Complex64> = (0..n)
        .map(|i| {
            if grid.is_boundary(i) {
                Complex64::default()
            } else {
                z[i] * areas[i] - scratch[i]
            }
        })
        .collect();
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            if grid.is_boundary(i) {
                0.0
            } else {
                1.0 / (areas[i] + tau * grid.weight_sums()[i])
            }
        })
        .collect();
    let mut dz = vec![Complex64::default(); n];
    pcg(
        |x, out| grid.shifted_apply(1.0, tau, x, out),
        &inv_diag,
        &b,
        &mut dz,
        Stop::Relative(1e-10),
        50_000,
    )
    .expect("shifted Laplacian is positive definite");
    z.iter().zip(&dz).map(|(a, d)| a + d).collect()
}

/// Projected gradient descent for `β`, started from the harmonic maps.
///
/// Each iteration takes an `H¹`-preconditioned gradient step on both
/// components, retracts pointwise onto `|u|² + |v|² = 2` and accepts the
/// result only if `I` does not increase; rejected steps shrink the step size.
pub fn minimize_beta_from(h1: &HarmonicLifting, h2: &HarmonicLifting, cfg: &BetaConfig) -> Result<ConstrainedPair> {
    h1.u0.check_same_grid(&h2.u0)?;
    let grid = Arc::clone(h1.u0.grid());
    let energy = |u: &[Complex64], v: &[Complex64]| grid.dirichlet_sum(u) + grid.dirichlet_sum(v);

    let mut u = h1.u0.values().to_vec();
    let mut v = h2.u0.values().to_vec();
    project(&grid, &mut u, &mut v)?;
    let mut current = energy(&u, &v);
    let mut history = vec![current];
    let mut tau = cfg.initial_step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let (mut nu, mut nv) = rayon::join(|| smooth(&grid, &u, tau), || smooth(&grid, &v, tau));
        project(&grid, &mut nu, &mut nv)?;
        let trial = energy(&nu, &nv);
        if trial <= current + DESCENT_SLACK * current.max(1.0) {
            let decrease = current - trial;
            u = nu;
            v = nv;
            current = trial;
            history.push(current);
            if decrease < cfg.tol * current.max(1.0) {
                converged = true;
                break;
            }
            tau = (tau * 2.0).min(cfg.max_step);
        } else {
            tau *= 0.25;
            if tau < 1e-14 {
                converged = true;
                break;
            }
        }
    }

    let violation = constraint_violation(&u, &v);
    Ok(ConstrainedPair {
        u_star: Field::from_values(&grid, u)?,
        v_star: Field::from_values(&grid, v)?,
        beta_value: current,
        constraint_violation: violation,
        iterations,
        converged,
        history,
    })
}

/// `β(g₁, g₂)` candidate from boundary data alone.
pub fn minimize_beta(
    g1: &BoundaryData,
    g2: &BoundaryData,
    grid: &Arc<Grid>,
    cfg: &BetaConfig,
) -> Result<ConstrainedPair> {
    let h1 = harmonic_lifting(g1, grid, cfg.harmonic_tol)?;
    let h2 = harmonic_lifting(g2, grid, cfg.harmonic_tol)?;
    minimize_beta_from(&h1, &h2, cfg)
}
