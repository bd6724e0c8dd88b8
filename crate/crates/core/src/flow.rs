//! Shared gradient-flow and Newton machinery for one- and two-component
//! Ginzburg–Landau energies.
//!
//! A model is a sum of quartic penalty terms `(c - Σ_{k∈S} |z_k|²)² / (4ε²)`:
//! the single-field energy has one term `(1, {u})`, the symmetric pair
//! `(2, {u, v})` and the non-symmetric pair adds `(1, {u})` to it.
//! States are stored component-major: `z[k * N + i]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{pcg, CgStats, NegativeCurvature, Stop};

pub(crate) const MAX_COMPONENTS: usize = 2;

#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub target: f64,
    pub comps: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct Model {
    pub ncomp: usize,
    pub terms: Vec<Term>,
    pub inv_eps2: f64,
}

impl Model {
    pub fn single(epsilon: f64) -> Self {
        Model {
            ncomp: 1,
            terms: vec![Term {
                target: 1.0,
                comps: vec![0],
            }],
            inv_eps2: 1.0 / (epsilon * epsilon),
        }
    }

    pub fn pair(epsilon: f64, extra_u_term: bool) -> Self {
        let mut terms = vec![Term {
            target: 2.0,
            comps: vec![0, 1],
        }];
        if extra_u_term {
            terms.push(Term {
                target: 1.0,
                comps: vec![0],
            });
        }
        Model {
            ncomp: 2,
            terms,
            inv_eps2: 1.0 / (epsilon * epsilon),
        }
    }

    fn gap(term: &Term, z: &[Complex64]) -> f64 {
        term.target - term.comps.iter().map(|&k| z[k].norm_sqr()).sum::<f64>()
    }

    /// Potential density `W(z)`.
    pub fn density(&self, z: &[Complex64]) -> f64 {
        0.25 * self.inv_eps2
            * self
                .terms
                .iter()
                .map(|t| {
                    let g = Self::gap(t, z);
                    g * g
                })
                .sum::<f64>()
    }

    /// Right-hand side of the Euler–Lagrange equations, `-∂W/∂z̄`.
    pub fn force(&self, z: &[Complex64], out: &mut [Complex64]) {
        for o in out.iter_mut().take(self.ncomp) {
            *o = Complex64::default();
        }
        for t in &self.terms {
            let g = Self::gap(t, z) * self.inv_eps2;
            for &k in &t.comps {
                out[k] += z[k] * g;
            }
        }
    }

    /// Real Hessian of `W` applied to `dz`.
    pub fn hess_apply(&self, z: &[Complex64], dz: &[Complex64], out: &mut [Complex64]) {
        for o in out.iter_mut().take(self.ncomp) {
            *o = Complex64::default();
        }
        for t in &self.terms {
            let g = Self::gap(t, z);
            let proj: f64 = t.comps.iter().map(|&l| z[l].re * dz[l].re + z[l].im * dz[l].im).sum();
            for &k in &t.comps {
                out[k] += (z[k] * (2.0 * proj) - dz[k] * g) * self.inv_eps2;
            }
        }
    }

    /// Mean of the real and imaginary Hessian diagonal entries per component.
    pub fn hess_diag(&self, z: &[Complex64], out: &mut [f64]) {
        for o in out.iter_mut().take(self.ncomp) {
            *o = 0.0;
        }
        for t in &self.terms {
            let g = Self::gap(t, z);
            for &k in &t.comps {
                out[k] += (z[k].norm_sqr() - g) * self.inv_eps2;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct FlowSettings {
    pub tau: f64,
    pub max_steps: usize,
    pub residual_tol: f64,
    pub newton: bool,
    pub newton_switch: f64,
    pub newton_interval: usize,
    pub record_energy: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct FlowOutcome {
    pub state: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub steps: usize,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<f64>,
}

const LINEAR_MAX_ITER: usize = 20_000;
const NEWTON_MAX_ITER: usize = 40;

pub(crate) struct Flow<'a> {
    pub grid: &'a Grid,
    pub model: Model,
    n: usize,
    inv_area: Vec<f64>,
}

impl<'a> Flow<'a> {
    pub fn new(grid: &'a Grid, model: Model) -> Self {
        let inv_area = (0..grid.len())
            .map(|i| {
                if grid.is_boundary(i) {
                    0.0
                } else {
                    1.0 / grid.areas()[i]
                }
            })
            .collect();
        Flow {
            grid,
            model,
            n: grid.len(),
            inv_area,
        }
    }

    fn node(&self, z: &[Complex64], i: usize) -> [Complex64; MAX_COMPONENTS] {
        let mut out = [Complex64::default(); MAX_COMPONENTS];
        for (k, o) in out.iter_mut().enumerate().take(self.model.ncomp) {
            *o = z[k * self.n + i];
        }
        out
    }

    pub fn scale(&self) -> f64 {
        1.0 + self.model.inv_eps2
    }

    /// Discrete energy: Dirichlet edge sums plus the potential quadrature.
    pub fn energy(&self, z: &[Complex64]) -> f64 {
        let n = self.n;
        let dirichlet: f64 = (0..self.model.ncomp)
            .map(|k| self.grid.dirichlet_sum(&z[k * n..(k + 1) * n]))
            .sum();
        let potential: f64 = (0..n)
            .map(|i| self.grid.areas()[i] * self.model.density(&self.node(z, i)))
            .sum();
        dirichlet + potential
    }

    /// `R = -Δ_h z - f(z)` on interior nodes, zero on boundary nodes.
    pub fn residual_field(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::default(); z.len()];
        for k in 0..self.model.ncomp {
            self.grid
                .stiffness_apply(&z[k * n..(k + 1) * n], &mut out[k * n..(k + 1) * n]);
        }
        let mut force = [Complex64::default(); MAX_COMPONENTS];
        for &i in self.grid.interior() {
            self.model.force(&self.node(z, i), &mut force);
            for (k, f) in force.iter().enumerate().take(self.model.ncomp) {
                let idx = k * n + i;
                out[idx] = out[idx] * self.inv_area[i] - f;
            }
        }
        out
    }

    /// Max-norm of each component's residual divided by `1 + 1/ε²`.
    pub fn residual_norms(&self, z: &[Complex64]) -> Vec<f64> {
        let r = self.residual_field(z);
        let s = self.scale();
        r.chunks(self.n)
            .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.norm())) / s)
            .collect()
    }

    fn max_residual(&self, z: &[Complex64]) -> f64 {
        self.residual_norms(z).into_iter().fold(0.0, f64::max)
    }

    /// One semi-implicit step: `(I - τΔ) z⁺ = z + τ f(z)` with Dirichlet data.
    pub fn step(&self, z: &mut [Complex64], tau: f64) -> CgStats {
        let n = self.n;
        let grid = self.grid;
        let areas = grid.areas();
        let mut rhs = vec![Complex64::default(); z.len()];
        let mut force = [Complex64::default(); MAX_COMPONENTS];
        for &i in grid.interior() {
            self.model.force(&self.node(z, i), &mut force);
            for (k, f) in force.iter().enumerate().take(self.model.ncomp) {
                rhs[k * n + i] = (z[k * n + i] + f * tau) * areas[i];
            }
        }
        let inv_diag: Vec<f64> = (0..n)
            .map(|i| {
                if grid.is_boundary(i) {
                    0.0
                } else {
                    1.0 / (areas[i] + tau * grid.weight_sums()[i])
                }
            })
            .collect();

        let mut stats = CgStats {
            iterations: 0,
            residual: 0.0,
            converged: true,
            history: Vec::new(),
        };
        let mut scratch = vec![Complex64::default(); n];
        for k in 0..self.model.ncomp {
            let zk = &mut z[k * n..(k + 1) * n];
            // solve for the correction so the boundary entries stay fixed
            grid.shifted_apply(1.0, tau, zk, &mut scratch);
            let b: Vec<Complex64> = (0..n).map(|i| rhs[k * n + i] - scratch[i]).collect();
            let mut dz = vec![Complex64::default(); n];
            let s = pcg(
                |x, out| grid.shifted_apply(1.0, tau, x, out),
                &inv_diag,
                &b,
                &mut dz,
                Stop::Relative(1e-10),
                LINEAR_MAX_ITER,
            )
            .expect("shifted Laplacian is positive definite");
            for i in 0..n {
                zk[i] += dz[i];
            }
            stats.iterations += s.iterations;
            stats.converged &= s.converged;
            stats.residual = stats.residual.max(s.residual);
        }
        stats
    }

    fn hessian_apply(&self, z: &[Complex64], dz: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for k in 0..self.model.ncomp {
            self.grid
                .stiffness_apply(&dz[k * n..(k + 1) * n], &mut out[k * n..(k + 1) * n]);
        }
        let mut h = [Complex64::default(); MAX_COMPONENTS];
        let areas = self.grid.areas();
        for &i in self.grid.interior() {
            self.model.hess_apply(&self.node(z, i), &self.node(dz, i), &mut h);
            for (k, hv) in h.iter().enumerate().take(self.model.ncomp) {
                out[k * n + i] += hv * areas[i];
            }
        }
    }

    /// Damped Newton on the discrete residual. Returns the number of accepted
    /// iterations; `z` only changes through accepted steps.
    pub fn newton(&self, z: &mut Vec<Complex64>, tol: f64) -> usize {
        let n = self.n;
        let areas = self.grid.areas();
        let euclid = |r: &[Complex64]| -> f64 {
            r.iter()
                .enumerate()
                .map(|(idx, v)| {
                    let a = areas[idx % n];
                    a * a * v.norm_sqr()
                })
                .sum::<f64>()
                .sqrt()
        };
        let weights: Vec<f64> = (0..z.len()).map(|idx| self.inv_area[idx % n] / self.scale()).collect();

        let mut accepted = 0;
        for _ in 0..NEWTON_MAX_ITER {
            let r = self.residual_field(z);
            let current = self.max_residual(z);
            if current <= tol {
                break;
            }
            let rhs: Vec<Complex64> = r.iter().enumerate().map(|(idx, v)| -v * areas[idx % n]).collect();

            let mut diag = [0.0; MAX_COMPONENTS];
            let mut inv_diag = vec![0.0; z.len()];
            for &i in self.grid.interior() {
                self.model.hess_diag(&self.node(z, i), &mut diag);
                for (k, d) in diag.iter().enumerate().take(self.model.ncomp) {
                    inv_diag[k * n + i] = 1.0 / (self.grid.weight_sums()[i] + areas[i] * d.max(0.0));
                }
            }
            let mut delta = vec![Complex64::default(); z.len()];
            let zs: &[Complex64] = z;
            let solve = pcg(
                |x, out| self.hessian_apply(zs, x, out),
                &inv_diag,
                &rhs,
                &mut delta,
                Stop::WeightedMax {
                    weights: &weights,
                    tol: 0.1 * tol.min(current * current),
                },
                LINEAR_MAX_ITER,
            );
            if let Err(NegativeCurvature) = solve {
                break;
            }

            let base = euclid(&r);
            let mut t = 1.0;
            let mut improved = false;
            while t >= 1.0 / 64.0 {
                let trial: Vec<Complex64> = z.iter().zip(&delta).map(|(a, d)| a + d * t).collect();
                let rt = self.residual_field(&trial);
                if euclid(&rt) < (1.0 - 1e-4 * t) * base {
                    *z = trial;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
            accepted += 1;
        }
        accepted
    }

    /// Semi-implicit flow with optional Newton hand-off until the scaled
    /// residual of every component is at most `residual_tol`.
    pub fn run(&self, mut z: Vec<Complex64>, cfg: &FlowSettings) -> Result<FlowOutcome> {
        let mut residual_history = Vec::new();
        let mut energy_history = Vec::new();
        if cfg.record_energy {
            energy_history.push(self.energy(&z));
        }
        let mut steps = 0;
        let mut newton_iterations = 0;
        let mut next_newton = cfg.newton_interval;
        let mut interval = cfg.newton_interval;

        loop {
            let res = self.max_residual(&z);
            residual_history.push(res);
            if res <= cfg.residual_tol {
                break;
            }
            if cfg.newton && (res <= cfg.newton_switch || steps >= next_newton) {
                let before = z.clone();
                let accepted = self.newton(&mut z, cfg.residual_tol);
                newton_iterations += accepted;
                if accepted > 0 && self.max_residual(&z) > res {
                    z = before;
                }
                interval *= 2;
                next_newton = steps + interval;
                let after = self.max_residual(&z);
                if after <= cfg.residual_tol {
                    residual_history.push(after);
                    break;
                }
            }
            if steps >= cfg.max_steps {
                return Err(Error::NotConverged {
                    steps,
                    residual: res,
                    history: residual_history,
                });
            }
            self.step(&mut z, cfg.tau);
            steps += 1;
            if cfg.record_energy {
                energy_history.push(self.energy(&z));
            }
        }

        let residuals = self.residual_norms(&z);
        Ok(FlowOutcome {
            state: z,
            residuals,
            steps,
            newton_iterations,
            residual_history,
            energy_history,
        })
    }
}
