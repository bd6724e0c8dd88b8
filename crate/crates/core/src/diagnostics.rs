//! Energies, modulus–phase decompositions and ε-sweep verdicts.

use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Model;
use crate::gl_solver::{modulus_identity_residual, GLSolution};
use crate::grid::{ComplexField, DomainKind, Field, Grid, ScalarField};
use crate::reference::HarmonicLifting;
use crate::two_component::{PairSolution, Variant};

/// Probe levels for the set `{1 - |u|² > δ}`.
pub const DELTAS: [f64; 2] = [0.25, 0.1];

/// Smallest modulus for which a phase is extracted.
pub const MIN_LIFT_MODULUS: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Single,
    SymmetricPair,
    NonSymmetricPair,
}

impl ProblemKind {
    pub fn is_pair(self) -> bool {
        self != ProblemKind::Single
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            ProblemKind::Single => None,
            ProblemKind::SymmetricPair => Some(Variant::Symmetric),
            ProblemKind::NonSymmetricPair => Some(Variant::NonSymmetric),
        }
    }
}

/// Everything measured on one solution. For single-field solutions the
/// `_v` entries are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub epsilon: f64,
    /// `½∫|∇u|²`.
    pub dirichlet_u: f64,
    pub dirichlet_v: f64,
    /// `(1/ε²)∫V` for the problem's potential (`(1 - |u|²)²` for one field).
    pub potential_combined: f64,
    /// `(1/ε²)∫(1 - |u|²)²`.
    pub potential_u: f64,
    pub potential_v: f64,
    /// Full `G_ε` or `F_ε`.
    pub g_energy: f64,
    /// `max |1 - |u||`.
    pub sup_dev_u: f64,
    pub sup_dev_v: f64,
    /// `‖u - u₀‖_{H¹}`.
    pub h1_dist_u: f64,
    pub h1_dist_v: f64,
    pub residual: f64,
    pub steps: usize,
    pub identity_residual: f64,
    /// `None` where `min |u| < ½`.
    pub div_residual_u: Option<f64>,
    pub div_residual_v: Option<f64>,
    /// `|{1 - |u|² > δ}|` for δ = 0.25 and 0.1 (union over components).
    pub omega_area_d025: f64,
    pub omega_area_d010: f64,
    /// `‖∇(1 - |u|²)‖₂`, combined over components.
    pub grad_potential_norm: f64,
    pub max_modulus_u: f64,
    pub max_modulus_v: f64,
    /// `max (|u|² + |v|²)`.
    pub max_modulus_sq_sum: f64,
    /// `max |u - u₀|` over the inner half-domain, a proxy for local
    /// uniform convergence away from the boundary.
    pub inner_dev_u: f64,
    pub inner_dev_v: f64,
}

/// `‖a - b‖_{H¹}` with the grid's quadrature and edge energy.
pub fn h1_distance(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    a.check_same_grid(b)?;
    let d: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    let grid = a.grid();
    let l2: f64 = d.iter().zip(grid.areas()).map(|(z, w)| w * z.norm_sqr()).sum();
    Ok((l2 + 2.0 * grid.dirichlet_sum(&d)).sqrt())
}

/// `max |1 - |u||`.
pub fn sup_deviation(u: &ComplexField) -> f64 {
    u.values().iter().fold(0.0, |m, z| m.max((1.0 - z.norm()).abs()))
}

/// Nodes of the inner half-domain: `r ≤ ½` on the disk, the centred square
/// of side ½ on the unit square.
pub fn in_inner_half(kind: DomainKind, [x, y]: [f64; 2]) -> bool {
    match kind {
        DomainKind::UnitDisk => x.hypot(y) <= 0.5,
        DomainKind::UnitSquare => (x - 0.5).abs().max((y - 0.5).abs()) <= 0.25,
    }
}

/// `max |a - b|` over the inner half-domain.
pub fn inner_deviation(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    a.check_same_grid(b)?;
    let grid = a.grid();
    Ok(grid
        .coords()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .filter(|(c, _)| in_inner_half(grid.kind(), **c))
        .fold(0.0, |m, (_, (x, y))| m.max((x - y).norm())))
}

fn potential_integral(grid: &Grid, inv_eps2: f64, density: impl Fn(usize) -> f64) -> f64 {
    (0..grid.len()).map(|i| grid.areas()[i] * density(i)).sum::<f64>() * inv_eps2
}

fn omega_area(grid: &Grid, fields: &[&[Complex64]], delta: f64) -> f64 {
    (0..grid.len())
        .filter(|&i| fields.iter().any(|f| 1.0 - f[i].norm_sqr() > delta))
        .fold(0.0, |acc, i| acc + grid.areas()[i])
}

fn grad_deficit_sq(grid: &Grid, u: &[Complex64]) -> f64 {
    let d: Vec<f64> = u.iter().map(|z| 1.0 - z.norm_sqr()).collect();
    2.0 * grid.dirichlet_sum(&d)
}

fn div_residual_or_none(u: &ComplexField, reference: &HarmonicLifting) -> Option<f64> {
    decompose(u, reference).ok().map(|m| m.div_residual)
}

/// Report for a single-field solution.
pub fn energy_report(solution: &GLSolution, reference: &HarmonicLifting) -> Result<EnergyReport> {
    let u = &solution.u;
    let grid = u.grid();
    let eps = solution.epsilon;
    let inv_eps2 = 1.0 / (eps * eps);
    let uv = u.values();
    let dirichlet_u = grid.dirichlet_sum(uv);
    let potential_u = potential_integral(grid, inv_eps2, |i| (1.0 - uv[i].norm_sqr()).powi(2));
    let max_u = uv.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    Ok(EnergyReport {
        epsilon: eps,
        dirichlet_u,
        dirichlet_v: 0.0,
        potential_combined: potential_u,
        potential_u,
        potential_v: 0.0,
        g_energy: dirichlet_u + 0.25 * potential_u,
        sup_dev_u: sup_deviation(u),
        sup_dev_v: 0.0,
        h1_dist_u: h1_distance(u, &reference.u0)?,
        h1_dist_v: 0.0,
        residual: solution.residual,
        steps: solution.steps_taken,
        identity_residual: modulus_identity_residual(grid, &Model::single(eps), uv),
        div_residual_u: div_residual_or_none(u, reference),
        div_residual_v: None,
        omega_area_d025: omega_area(grid, &[uv], DELTAS[0]),
        omega_area_d010: omega_area(grid, &[uv], DELTAS[1]),
        grad_potential_norm: grad_deficit_sq(grid, uv).sqrt(),
        max_modulus_u: max_u,
        max_modulus_v: 0.0,
        max_modulus_sq_sum: max_u * max_u,
        inner_dev_u: inner_deviation(u, &reference.u0)?,
        inner_dev_v: 0.0,
    })
}

/// Report for a two-component solution against `(u₀, v₀)`.
pub fn pair_energy_report(
    solution: &PairSolution,
    reference_u: &HarmonicLifting,
    reference_v: &HarmonicLifting,
) -> Result<EnergyReport> {
    let (u, v) = (&solution.u, &solution.v);
    u.check_same_grid(v)?;
    let grid = u.grid();
    let eps = solution.epsilon;
    let inv_eps2 = 1.0 / (eps * eps);
    let (uv, vv) = (u.values(), v.values());
    let dirichlet_u = grid.dirichlet_sum(uv);
    let dirichlet_v = grid.dirichlet_sum(vv);
    let potential_u = potential_integral(grid, inv_eps2, |i| (1.0 - uv[i].norm_sqr()).powi(2));
    let potential_v = potential_integral(grid, inv_eps2, |i| (1.0 - vv[i].norm_sqr()).powi(2));
    let symmetric = potential_integral(grid, inv_eps2, |i| {
        (2.0 - (uv[i].norm_sqr() + vv[i].norm_sqr())).powi(2)
    });
    let potential_combined = match solution.variant {
        Variant::Symmetric => symmetric,
        Variant::NonSymmetric => symmetric + potential_u,
    };
    let mut z = uv.to_vec();
    z.extend_from_slice(vv);
    let model = solution.variant.model(eps);
    let max_sq = uv
        .iter()
        .zip(vv)
        .fold(0.0f64, |m, (a, b)| m.max(a.norm_sqr() + b.norm_sqr()));
    Ok(EnergyReport {
        epsilon: eps,
        dirichlet_u,
        dirichlet_v,
        potential_combined,
        potential_u,
        potential_v,
        g_energy: dirichlet_u + dirichlet_v + 0.25 * potential_combined,
        sup_dev_u: sup_deviation(u),
        sup_dev_v: sup_deviation(v),
        h1_dist_u: h1_distance(u, &reference_u.u0)?,
        h1_dist_v: h1_distance(v, &reference_v.u0)?,
        residual: solution.residual(),
        steps: solution.steps_taken,
        identity_residual: modulus_identity_residual(grid, &model, &z),
        div_residual_u: div_residual_or_none(u, reference_u),
        div_residual_v: div_residual_or_none(v, reference_v),
        omega_area_d025: omega_area(grid, &[uv, vv], DELTAS[0]),
        omega_area_d010: omega_area(grid, &[uv, vv], DELTAS[1]),
        grad_potential_norm: (grad_deficit_sq(grid, uv) + grad_deficit_sq(grid, vv)).sqrt(),
        max_modulus_u: uv.iter().fold(0.0f64, |m, a| m.max(a.norm())),
        max_modulus_v: vv.iter().fold(0.0f64, |m, a| m.max(a.norm())),
        max_modulus_sq_sum: max_sq,
        inner_dev_u: inner_deviation(u, &reference_u.u0)?,
        inner_dev_v: inner_deviation(v, &reference_v.u0)?,
    })
}

/// `u = ρ e^{iζ}` with `ζ = φ + η` and `ζ = φ₀` on the boundary.
#[derive(Clone, Debug)]
pub struct ModulusPhase {
    pub rho: ScalarField,
    pub zeta: ScalarField,
    pub eta: ScalarField,
    /// Max-norm over interior nodes of the discrete `div(ρ²∇ζ)`.
    pub div_residual: f64,
}

fn principal(a: f64) -> f64 {
    let t = a.rem_euclid(std::f64::consts::TAU);
    if t > std::f64::consts::PI {
        t - std::f64::consts::TAU
    } else {
        t
    }
}

/// Splits `u` into modulus and a continuous phase. The phase is propagated
/// breadth-first from the boundary, where it is pinned to the reference
/// lifting.
pub fn decompose(u: &ComplexField, reference: &HarmonicLifting) -> Result<ModulusPhase> {
    u.check_same_grid(&reference.phi)?;
    let grid = u.grid();
    let uv = u.values();
    let min_modulus = uv.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
    if !(min_modulus >= MIN_LIFT_MODULUS) {
        return Err(Error::LiftingUnavailable { min_modulus });
    }
    let phi = reference.phi.values();

    let n = grid.len();
    let mut zeta = vec![f64::NAN; n];
    let mut queue = VecDeque::new();
    for &b in grid.boundary() {
        zeta[b] = phi[b];
        queue.push_back(b);
    }
    while let Some(i) = queue.pop_front() {
        for (j, _) in grid.neighbours(i) {
            if zeta[j].is_nan() {
                zeta[j] = zeta[i] + (uv[j] * uv[i].conj()).arg();
                queue.push_back(j);
            }
        }
    }

    // ρ_iρ_j sin(ζ_j - ζ_i) = Im(ū_i u_j), independent of the unwrapping
    let div_residual = grid
        .interior()
        .iter()
        .map(|&i| {
            let s: f64 = grid.neighbours(i).map(|(j, w)| w * (uv[i].conj() * uv[j]).im).sum();
            (s / grid.areas()[i]).abs()
        })
        .fold(0.0, f64::max);

    // remove the rounding drift accumulated along the walk
    for &i in grid.interior() {
        zeta[i] += principal(uv[i].arg() - zeta[i]);
    }
    let rho: Vec<f64> = uv.iter().map(|z| z.norm()).collect();
    let eta: Vec<f64> = zeta.iter().zip(phi).map(|(a, b)| a - b).collect();
    Ok(ModulusPhase {
        rho: Field::from_values(grid, rho)?,
        zeta: Field::from_values(grid, zeta)?,
        eta: Field::from_values(grid, eta)?,
        div_residual,
    })
}

/// One ε level of a sweep; `report` is `None` when the solve failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub epsilon: f64,
    pub report: Option<EnergyReport>,
    pub failure: Option<String>,
}

/// Reference energies of the boundary data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEnergies {
    /// `½∫|∇u₀|²`.
    pub dirichlet_u0: f64,
    pub dirichlet_v0: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// Observed suprema of the potential integrals over a sweep. Only the
/// entries relevant to the problem are present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Gammas {
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    pub gamma4: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub problem: ProblemKind,
    pub levels: Vec<LevelReport>,
    pub reference: ReferenceEnergies,
    /// Grid spacing `h`.
    pub spacing: f64,
    pub residual_tol: f64,
}

impl SweepReport {
    pub fn converged(&self) -> impl Iterator<Item = &EnergyReport> {
        self.levels.iter().filter_map(|l| l.report.as_ref())
    }

    pub fn observed_gammas(&self) -> Gammas {
        let sup = |f: fn(&EnergyReport) -> f64| {
            self.converged()
                .map(f)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        };
        match self.problem {
            ProblemKind::Single => Gammas {
                gamma0: sup(|r| r.potential_u),
                ..Gammas::default()
            },
            ProblemKind::SymmetricPair => Gammas {
                gamma1: sup(|r| r.potential_combined),
                gamma3: sup(|r| r.potential_u),
                gamma4: sup(|r| r.potential_v),
                ..Gammas::default()
            },
            ProblemKind::NonSymmetricPair => Gammas {
                gamma2: sup(|r| r.potential_combined),
                ..Gammas::default()
            },
        }
    }

    /// `½∫(|∇u₀|² + |∇v₀|²)`, or `½∫|∇u₀|²` for one field.
    pub fn reference_energy(&self) -> f64 {
        self.reference
            .alpha
            .unwrap_or(self.reference.dirichlet_u0 + self.reference.dirichlet_v0.unwrap_or(0.0))
    }
}

/// Hypothesis thresholds. Unset values default to the reference energies
/// (`c1`, `c3`, `c5`) or to probes derived from the sweep itself.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub c6: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub hypothesis_met: bool,
    pub outcome: Outcome,
    pub detail: String,
    pub margins: BTreeMap<String, f64>,
}

impl Verdict {
    fn new(check: &str) -> Self {
        Verdict {
            check: check.to_string(),
            hypothesis_met: false,
            outcome: Outcome::Inconclusive,
            detail: String::new(),
            margins: BTreeMap::new(),
        }
    }

    fn margin(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.margins.insert(key.to_string(), value);
        }
    }

    fn vacuous(mut self) -> Self {
        self.outcome = Outcome::Consistent;
        self.detail = "hypothesis not met by the sweep; implication holds vacuously".into();
        self
    }
}

/// Factor by which a quantity must fall across the sweep to count as
/// tending to zero.
pub const DECAY_FACTOR: f64 = 10.0;
/// A quantity that keeps at least this fraction of its initial value is
/// counted as not tending to zero.
const STALL_FRACTION: f64 = 0.5;
const ZERO_FLOOR: f64 = 1e-12;

/// Trend summary of a positive series ordered by decreasing ε.
#[derive(Clone, Copy, Debug)]
struct Trend {
    first: f64,
    last: f64,
    /// Least-squares slope of `ln q` against `ln ε`; positive when `q`
    /// shrinks with ε.
    slope: f64,
    zero: bool,
}

impl Trend {
    fn of(eps: &[f64], q: &[f64]) -> Trend {
        let first = q[0];
        let last = q[q.len() - 1];
        let zero = q.iter().all(|x| x.abs() <= ZERO_FLOOR);
        let slope = if q.iter().all(|&x| x > 0.0) {
            let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
            let ys: Vec<f64> = q.iter().map(|v| v.ln()).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            sxy / sxx
        } else {
            f64::NAN
        };
        Trend {
            first,
            last,
            slope,
            zero,
        }
    }

    fn decays(&self) -> bool {
        self.zero || (self.slope > 0.0 && self.last * DECAY_FACTOR <= self.first)
    }

    fn stalls(&self) -> bool {
        !self.zero && self.last >= STALL_FRACTION * self.first
    }

    fn record(&self, v: &mut Verdict, name: &str) {
        v.margin(&format!("{name}_first"), self.first);
        v.margin(&format!("{name}_last"), self.last);
        v.margin(&format!("{name}_loglog_slope"), self.slope);
        if self.last > 0.0 {
            v.margin(&format!("{name}_decay_factor"), self.first / self.last);
        }
    }
}

/// Energy tolerance `0.05·(1 + E)` used for all energy comparisons.
pub fn energy_tolerance(reference_energy: f64) -> f64 {
    0.05 * (1.0 + reference_energy)
}

/// Classifies a sweep against the energy dichotomies, the potential/H¹
/// equivalence and the potential bounds. All conclusions are trend-based:
/// an asymptotic statement cannot be decided at finite ε.
pub fn classify_sweep(report: &SweepReport, thresholds: &Thresholds) -> Result<Vec<Verdict>> {
    let rows: Vec<&EnergyReport> = report.converged().collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientData { levels: rows.len() });
    }
    if rows.windows(2).any(|w| !(w[1].epsilon < w[0].epsilon)) {
        return Err(Error::Format("epsilon levels must be strictly decreasing".into()));
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let series = |f: &dyn Fn(&EnergyReport) -> f64| -> Vec<f64> { rows.iter().map(|r| f(r)).collect() };
    let dirichlet = series(&|r| r.dirichlet_u + r.dirichlet_v);
    let tail = &dirichlet[rows.len() / 2..];
    let tail_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let last_dirichlet = dirichlet[dirichlet.len() - 1];

    let h1 = Trend::of(&eps, &series(&|r| (r.h1_dist_u.powi(2) + r.h1_dist_v.powi(2)).sqrt()));
    let potential = Trend::of(&eps, &series(&|r| r.potential_combined));
    let sup_dev = Trend::of(&eps, &series(&|r| r.sup_dev_u.max(r.sup_dev_v)));

    let mut out = Vec::new();
    match report.problem {
        ProblemKind::Single => {
            let e0 = report.reference.dirichlet_u0;
            let tol = energy_tolerance(e0);
            out.push(below_reference(
                "energy_at_or_below_reference_implies_h1_convergence",
                thresholds.c1.unwrap_or(e0),
                e0,
                tol,
                (tail_max, last_dirichlet),
                &h1,
            ));
            out.push(above_reference_single(thresholds.c2, e0, tol, tail_min, &sup_dev));
            out.push(potential_h1_equivalence(&potential, &h1));
            out.push(potential_bound(
                "potential_bounded_single",
                &eps,
                &series(&|r| r.potential_u),
            ));
        }
        ProblemKind::NonSymmetricPair => {
            let alpha = report.reference_energy();
            let tol = energy_tolerance(alpha);
            out.push(below_reference(
                "pair_energy_at_or_below_alpha_implies_h1_convergence",
                thresholds.c3.unwrap_or(alpha),
                alpha,
                tol,
                (tail_max, last_dirichlet),
                &h1,
            ));
            out.push(above_reference_nonsymmetric(
                thresholds.c4,
                alpha,
                tol,
                tail_min,
                &potential,
            ));
            out.push(potential_bound(
                "potential_bounded_non_symmetric",
                &eps,
                &series(&|r| r.potential_combined),
            ));
            out.push(potential_bound(
                "potential_u_bounded_non_symmetric",
                &eps,
                &series(&|r| r.potential_u),
            ));
            out.push(potential_bound(
                "potential_v_bounded_non_symmetric",
                &eps,
                &series(&|r| r.potential_v),
            ));
        }
        ProblemKind::SymmetricPair => {
            let alpha = report.reference_energy();
            let beta = report.reference.beta;
            let gammas = report.observed_gammas();
            out.push(symmetric_below_beta(
                thresholds.c5,
                beta,
                alpha,
                (tail_max, last_dirichlet),
                &potential,
                &h1,
            ));
            out.push(symmetric_above(thresholds.c6, alpha, beta, &gammas, tail_min, &sup_dev));
            out.push(potential_bound(
                "potential_bounded_symmetric",
                &eps,
                &series(&|r| r.potential_combined),
            ));
        }
    }
    out.push(lifted_system(report, &rows));
    Ok(out)
}

fn below_reference(name: &str, c: f64, reference: f64, tol: f64, (tail_max, last): (f64, f64), h1: &Trend) -> Verdict {
    let mut v = Verdict::new(name);
    v.margin("threshold", c);
    v.margin("reference_energy", reference);
    v.margin("tail_max_dirichlet", tail_max);
    v.margin("last_dirichlet", last);
    v.margin("tolerance", tol);
    h1.record(&mut v, "h1_dist");
    v.hypothesis_met = tail_max <= c + tol && c <= reference + tol;
    if !v.hypothesis_met {
        return v.vacuous();
    }
    let threshold_matches = (c - reference).abs() <= tol;
    let energy_matches = (last - reference).abs() <= tol;
    v.margin("last_dirichlet_gap", (last - reference).abs());
    if !threshold_matches || !energy_matches {
        v.outcome = Outcome::Inconsistent;
        v.detail = "energies stay below the threshold but do not approach the reference energy".into();
    } else if h1.decays() {
        v.outcome = Outcome::Consistent;
        v.detail = "energy approaches the reference and the H1 distance to the reference map decays".into();
    } else if h1.stalls() {
        v.outcome = Outcome::Inconsistent;
        v.detail = "energy at or below the reference but the H1 distance does not decay".into();
    } else {
        v.detail = "H1 distance decreases but not by the required factor over this sweep".into();
    }
    v
}

fn above_reference_single(c2: Option<f64>, e0: f64, tol: f64, tail_min: f64, sup_dev: &Trend) -> Verdict {
    let mut v = Verdict::new("energy_above_reference_implies_no_uniform_convergence");
    let c = c2.unwrap_or(tail_min);
    v.margin("threshold", c);
    v.margin("reference_energy", e0);
    v.margin("tail_min_dirichlet", tail_min);
    sup_dev.record(&mut v, "sup_dev");
    v.hypothesis_met = tail_min >= c && c > e0 + tol;
    if !v.hypothesis_met {
        return v.vacuous();
    }
    persistence(v, sup_dev, "sup-deviation of the modulus")
}

fn above_reference_nonsymmetric(c4: Option<f64>, alpha: f64, tol: f64, tail_min: f64, potential: &Trend) -> Verdict {
    let mut v = Verdict::new("pair_energy_above_alpha_implies_nonvanishing_potential");
    let c = c4.unwrap_or(tail_min);
    v.margin("threshold", c);
    v.margin("alpha", alpha);
    v.margin("tail_min_dirichlet", tail_min);
    potential.record(&mut v, "potential");
    v.hypothesis_met = tail_min >= c && c > alpha + tol;
    if !v.hypothesis_met {
        return v.vacuous();
    }
    persistence(v, potential, "combined potential")
}

/// Conclusion "does not tend to zero".
fn persistence(mut v: Verdict, q: &Trend, what: &str) -> Verdict {
    if q.decays() {
        v.outcome = Outcome::Inconsistent;
        v.detail = format!("{what} decays although the energy stays above the threshold");
    } else if q.stalls() {
        v.outcome = Outcome::Consistent;
        v.detail = format!("{what} stays away from zero");
    } else {
        v.detail = format!("{what} decreases moderately; undecided at this sweep range");
    }
    v
}

fn potential_h1_equivalence(potential: &Trend, h1: &Trend) -> Verdict {
    let mut v = Verdict::new("potential_decay_iff_h1_convergence");
    v.hypothesis_met = true;
    potential.record(&mut v, "potential");
    h1.record(&mut v, "h1_dist");
    v.outcome = match (potential.decays(), h1.decays()) {
        (true, true) => {
            v.detail = "potential and H1 distance decay together".into();
            Outcome::Consistent
        }
        (true, false) if h1.stalls() => {
            v.detail = "potential decays while the H1 distance stalls".into();
            Outcome::Inconsistent
        }
        (false, true) if potential.stalls() => {
            v.detail = "H1 distance decays while the potential stalls".into();
            Outcome::Inconsistent
        }
        (false, false) if potential.stalls() && h1.stalls() => {
            v.detail = "neither quantity decays; equivalence not contradicted".into();
            Outcome::Consistent
        }
        _ => {
            v.detail = "trends differ in strength; undecided at this sweep range".into();
            Outcome::Inconclusive
        }
    };
    v
}

/// Potential integrals stay within 20% of their largest-ε value.
pub const POTENTIAL_SLACK: f64 = 1.2;

fn potential_bound(name: &str, eps: &[f64], q: &[f64]) -> Verdict {
    let mut v = Verdict::new(name);
    v.hypothesis_met = true;
    let sup = q.iter().copied().fold(0.0, f64::max);
    v.margin("largest_epsilon_value", q[0]);
    v.margin("observed_supremum", sup);
    v.margin("smallest_epsilon", eps[eps.len() - 1]);
    if q[0] <= ZERO_FLOOR {
        v.outcome = if sup <= ZERO_FLOOR {
            Outcome::Consistent
        } else {
            Outcome::Inconclusive
        };
    } else {
        v.margin("ratio_to_largest_epsilon_value", sup / q[0]);
        v.outcome = if sup <= POTENTIAL_SLACK * q[0] {
            Outcome::Consistent
        } else {
            Outcome::Inconclusive
        };
    }
    v.detail = match v.outcome {
        Outcome::Consistent => "observed potential integrals stay bounded across the sweep".into(),
        _ => "potential grows beyond 1.2x its largest-epsilon value; the bound constant is unknown".into(),
    };
    v
}

fn symmetric_below_beta(
    c5: Option<f64>,
    beta: Option<f64>,
    alpha: f64,
    (tail_max, last): (f64, f64),
    potential: &Trend,
    h1: &Trend,
) -> Verdict {
    let mut v = Verdict::new("pair_energy_at_or_below_beta_implies_constrained_limit");
    let Some(beta) = beta else {
        v.detail = "beta was not computed".into();
        return v;
    };
    let tol = energy_tolerance(beta);
    let c = c5.unwrap_or(beta);
    v.margin("threshold", c);
    v.margin("beta", beta);
    v.margin("alpha", alpha);
    v.margin("tail_max_dirichlet", tail_max);
    v.margin("last_dirichlet", last);
    potential.record(&mut v, "potential");
    h1.record(&mut v, "h1_dist");
    v.hypothesis_met = tail_max <= c + tol && c <= beta + tol;
    if !v.hypothesis_met {
        return v.vacuous();
    }
    let equal = (alpha - beta).abs() <= 1e-6 * (1.0 + alpha);
    if (c - beta).abs() > tol || (last - beta).abs() > tol {
        v.outcome = Outcome::Inconsistent;
        v.detail = "energies stay below the threshold but do not approach beta".into();
    } else if !potential.decays() {
        v.outcome = if potential.stalls() {
            Outcome::Inconsistent
        } else {
            Outcome::Inconclusive
        };
        v.detail = "combined potential does not decay, so the limit is not constrained".into();
    } else if equal && !h1.decays() {
        v.outcome = if h1.stalls() {
            Outcome::Inconsistent
        } else {
            Outcome::Inconclusive
        };
        v.detail = "alpha = beta but the H1 distance to (u0, v0) does not decay".into();
    } else {
        v.outcome = Outcome::Consistent;
        v.detail = "energy approaches beta and the combined potential decays".into();
    }
    v
}

fn symmetric_above(
    c6: Option<f64>,
    alpha: f64,
    beta: Option<f64>,
    gammas: &Gammas,
    tail_min: f64,
    sup_dev: &Trend,
) -> Verdict {
    let mut v = Verdict::new("pair_energy_above_alpha_plus_gamma_terms_implies_no_uniform_convergence");
    let (g1, g3, g4) = (
        gammas.gamma1.unwrap_or(0.0),
        gammas.gamma3.unwrap_or(0.0),
        gammas.gamma4.unwrap_or(0.0),
    );
    let bound = alpha + (g1 * g3).sqrt() + (g1 * g4).sqrt();
    let c = c6.unwrap_or(tail_min);
    v.margin("threshold", c);
    v.margin("alpha_plus_gamma_terms", bound);
    v.margin("tail_min_dirichlet", tail_min);
    sup_dev.record(&mut v, "sup_dev");
    let equal = beta.is_some_and(|b| (alpha - b).abs() <= 1e-6 * (1.0 + alpha));
    v.hypothesis_met = equal && tail_min >= c && c > bound;
    if !v.hypothesis_met {
        let mut v = v.vacuous();
        v.detail
            .push_str(" (observed-constant surrogate for the gamma constants)");
        return v;
    }
    let mut v = persistence(v, sup_dev, "sup-deviation of the moduli");
    v.detail
        .push_str(" (observed-constant surrogate for the gamma constants)");
    v
}

/// `div(ρ²∇ζ)` and modulus-identity residuals against `50·(h + tol)·(1 + E)`.
pub const LIFTED_FACTOR: f64 = 50.0;

pub fn lifted_bound(report: &SweepReport) -> f64 {
    LIFTED_FACTOR * (report.spacing + report.residual_tol) * (1.0 + report.reference_energy())
}

fn lifted_system(report: &SweepReport, rows: &[&EnergyReport]) -> Verdict {
    let mut v = Verdict::new("lifted_system_residuals");
    let bound = lifted_bound(report);
    v.margin("bound", bound);
    let div = rows
        .iter()
        .flat_map(|r| [r.div_residual_u, r.div_residual_v])
        .flatten()
        .fold(0.0, f64::max);
    let ident = rows.iter().map(|r| r.identity_residual).fold(0.0, f64::max);
    v.margin("max_div_residual", div);
    v.margin("max_identity_residual", ident);
    v.hypothesis_met = rows.iter().any(|r| r.div_residual_u.is_some());
    if div <= bound && ident <= bound {
        v.outcome = Outcome::Consistent;
        v.detail = "modulus-phase and modulus identities hold on the stencil".into();
    } else {
        v.outcome = Outcome::Inconsistent;
        v.detail = "discrete residuals of the lifted system exceed the bound".into();
    }
    v
}
