//! Configuration-driven runs: sweeps over ε, reports and artifacts.
//!
//! A run directory holds `sweep.csv`, `verdicts.json`, `reference.json`,
//! one `solves/level_NN.json` record per ε, optional `fields/*.csv` dumps
//! and a `run_meta.json` sidecar. Only the sidecar carries wall-clock data.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{make_boundary, BoundaryData, BoundarySpec};
use crate::diagnostics::{
    classify_sweep, energy_report, pair_energy_report, EnergyReport, Gammas, LevelReport, Outcome, ProblemKind,
    ReferenceEnergies, SweepReport, Thresholds, Verdict,
};
use crate::dump::{read_field, write_field};
use crate::error::{Error, Result};
use crate::gl_solver::{solve_gl_with, SolverConfig, TAU_FACTOR};
use crate::grid::{build_grid, ComplexField, DomainKind, Grid, MIN_RESOLUTION};
use crate::reference::{
    alpha_value, harmonic_lifting, minimize_beta_from, BetaConfig, ConstrainedPair, HarmonicLifting,
};
use crate::two_component::solve_pair_with;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER_FAILURE: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 2;
pub const EXIT_INVALID_CONFIG: i32 = 64;
pub const EXIT_HYPOTHESIS: i32 = 65;

/// Tolerance of the `β ≤ α` check.
pub const ALPHA_BETA_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Single,
    SymmetricPair,
    NonSymmetricPair,
    BetaMinimizer,
    HarmonicOnly,
}

impl Problem {
    fn boundary_count(self) -> usize {
        match self {
            Problem::Single | Problem::HarmonicOnly => 1,
            _ => 2,
        }
    }

    fn kind(self) -> Option<ProblemKind> {
        match self {
            Problem::Single => Some(ProblemKind::Single),
            Problem::SymmetricPair => Some(ProblemKind::SymmetricPair),
            Problem::NonSymmetricPair => Some(ProblemKind::NonSymmetricPair),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub resolution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Flow step; defaults to `0.25·min(ε)²`.
    pub tau: f64,
    pub max_steps: usize,
    pub residual_tol: f64,
    pub newton: bool,
    pub continuation: bool,
    /// Field dumps used as the initial guess of the first ε level.
    pub initial_field: Option<PathBuf>,
    pub initial_field_v: Option<PathBuf>,
    #[serde(skip)]
    tau_auto: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub dump_fields: bool,
}

/// A fully defaulted and validated run description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub boundary: Vec<BoundarySpec>,
    pub problem: Problem,
    pub epsilons: Vec<f64>,
    pub solver: SolverSection,
    pub beta: BetaConfig,
    pub thresholds: Thresholds,
    pub output: OutputConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: Option<RawDomain>,
    #[serde(default)]
    boundary: Vec<BoundarySpec>,
    problem: Option<Problem>,
    #[serde(default)]
    epsilons: Vec<f64>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    beta: BetaConfig,
    #[serde(default)]
    thresholds: Thresholds,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    kind: DomainKind,
    resolution: usize,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tau: Option<f64>,
    max_steps: Option<usize>,
    residual_tol: Option<f64>,
    newton: Option<bool>,
    continuation: Option<bool>,
    initial_field: Option<PathBuf>,
    initial_field_v: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    dump_fields: Option<bool>,
}

fn line_of(raw: &str, offset: usize) -> usize {
    raw[..offset.min(raw.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or at top level), for messages.
fn anchor(raw: &str, section: Option<&str>, key: &str) -> String {
    let mut current: Option<String> = None;
    for (idx, line) in raw.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            current = Some(t.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            if section.is_none() && current.as_deref() == Some(key) {
                return format!("line {}", idx + 1);
            }
            continue;
        }
        let in_section = match section {
            None => current.is_none(),
            Some(s) => current.as_deref() == Some(s),
        };
        let is_key = t
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='));
        if in_section && is_key {
            return format!("line {}", idx + 1);
        }
    }
    match section {
        Some(s) => format!("[{s}] {key}"),
        None => key.to_string(),
    }
}

impl RunConfig {
    /// Every violation of the config invariants, each with a location.
    fn violations(&self, locate: &dyn Fn(Option<&str>, &str) -> String) -> Vec<String> {
        let mut out = Vec::new();
        if self.domain.resolution < MIN_RESOLUTION {
            out.push(format!(
                "{}: resolution must be at least {MIN_RESOLUTION}, got {}",
                locate(Some("domain"), "resolution"),
                self.domain.resolution
            ));
        }
        let need = self.problem.boundary_count();
        if self.boundary.len() != need {
            let msg = if need == 2 {
                "two boundary specs required".to_string()
            } else {
                "exactly one boundary spec required".to_string()
            };
            out.push(format!(
                "{}: {msg}, got {}",
                locate(None, "boundary"),
                self.boundary.len()
            ));
        }
        for (k, b) in self.boundary.iter().enumerate() {
            if let BoundarySpec::Table { path: None, values } = b {
                if values.is_empty() {
                    out.push(format!(
                        "{}: boundary {} table needs a path or values",
                        locate(None, "boundary"),
                        k + 1
                    ));
                }
            }
        }
        let sweeps = !matches!(self.problem, Problem::BetaMinimizer | Problem::HarmonicOnly);
        if sweeps && self.epsilons.is_empty() {
            out.push(format!(
                "{}: at least one epsilon is required",
                locate(None, "epsilons")
            ));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            out.push(format!("{}: epsilons must be positive", locate(None, "epsilons")));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            out.push(format!(
                "{}: epsilons must be strictly decreasing",
                locate(None, "epsilons")
            ));
        }
        if let Some(limit) = self.tau_limit() {
            if !(self.solver.tau > 0.0) {
                out.push(format!("{}: tau must be positive", locate(Some("solver"), "tau")));
            } else if self.solver.tau > limit * (1.0 + 1e-12) {
                out.push(format!(
                    "{}: tau = {} exceeds 0.25 * min(epsilon)^2 = {limit}",
                    locate(Some("solver"), "tau"),
                    self.solver.tau
                ));
            }
        }
        if !(self.solver.residual_tol > 0.0) {
            out.push(format!(
                "{}: residual_tol must be positive",
                locate(Some("solver"), "residual_tol")
            ));
        }
        if self.solver.max_steps == 0 {
            out.push(format!(
                "{}: max_steps must be positive",
                locate(Some("solver"), "max_steps")
            ));
        }
        if self.solver.initial_field_v.is_some()
            && !matches!(self.problem, Problem::SymmetricPair | Problem::NonSymmetricPair)
        {
            out.push(format!(
                "{}: initial_field_v applies to pair problems only",
                locate(Some("solver"), "initial_field_v")
            ));
        }
        if !(self.beta.tol > 0.0 && self.beta.initial_step > 0.0 && self.beta.max_step >= self.beta.initial_step) {
            out.push(format!(
                "{}: beta needs tol > 0 and 0 < initial_step <= max_step",
                locate(None, "beta")
            ));
        }
        out
    }

    fn tau_limit(&self) -> Option<f64> {
        let min = self.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
        min.is_finite().then_some(TAU_FACTOR * min * min)
    }

    /// Checks the invariants after programmatic edits (e.g. overrides).
    pub fn validate(&self) -> Result<()> {
        let v = self.violations(&|s, k| match s {
            Some(s) => format!("{s}.{k}"),
            None => k.to_string(),
        });
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("\n")))
        }
    }

    /// Replaces the ε list, the resolution or the output directory; an
    /// automatic τ follows the new ε list.
    pub fn apply_overrides(&mut self, epsilons: Option<Vec<f64>>, resolution: Option<usize>, out: Option<PathBuf>) {
        if let Some(e) = epsilons {
            self.epsilons = e;
            if self.solver.tau_auto {
                self.solver.tau = self.tau_limit().unwrap_or(0.0);
            }
        }
        if let Some(n) = resolution {
            self.domain.resolution = n;
        }
        if let Some(d) = out {
            self.output.dir = d;
        }
    }

    /// Solver settings for one ε level.
    pub fn solver_config(&self, epsilon: f64) -> SolverConfig {
        SolverConfig {
            epsilon,
            tau: self.solver.tau,
            max_steps: self.solver.max_steps,
            residual_tol: self.solver.residual_tol,
            newton: self.solver.newton,
            continuation: self.solver.continuation,
        }
    }
}

/// Parses and validates a TOML run description, reporting every violation.
pub fn validate_config(raw: &str) -> Result<RunConfig> {
    let parsed: RawConfig = toml::from_str(raw).map_err(|e| {
        let at = e
            .span()
            .map(|s| format!("line {}: ", line_of(raw, s.start)))
            .unwrap_or_default();
        Error::Config(format!("{at}{}", e.message()))
    })?;

    let mut missing = Vec::new();
    if parsed.domain.is_none() {
        missing.push("missing [domain] section with kind and resolution".to_string());
    }
    if parsed.problem.is_none() {
        missing.push("missing problem".to_string());
    }
    let (Some(domain), Some(problem)) = (parsed.domain, parsed.problem) else {
        return Err(Error::Config(missing.join("\n")));
    };

    let defaults = SolverConfig::new(1.0);
    let solver = parsed.solver;
    let mut config = RunConfig {
        domain: DomainConfig {
            kind: domain.kind,
            resolution: domain.resolution,
        },
        boundary: parsed.boundary,
        problem,
        epsilons: parsed.epsilons,
        solver: SolverSection {
            tau: solver.tau.unwrap_or(0.0),
            max_steps: solver.max_steps.unwrap_or(defaults.max_steps),
            residual_tol: solver.residual_tol.unwrap_or(defaults.residual_tol),
            newton: solver.newton.unwrap_or(defaults.newton),
            continuation: solver.continuation.unwrap_or(defaults.continuation),
            initial_field: solver.initial_field,
            initial_field_v: solver.initial_field_v,
            tau_auto: solver.tau.is_none(),
        },
        beta: parsed.beta,
        thresholds: parsed.thresholds,
        output: OutputConfig {
            dir: parsed.output.dir.unwrap_or_else(|| PathBuf::from("gl-run")),
            dump_fields: parsed.output.dump_fields.unwrap_or(false),
        },
    };
    if config.solver.tau_auto {
        config.solver.tau = config.tau_limit().unwrap_or(TAU_FACTOR);
    }
    let v = config.violations(&|s, k| anchor(raw, s, k));
    if v.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(v.join("\n")))
    }
}

/// Reads a config file; table, initial-field and output paths are resolved
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let raw = std::fs::read_to_string(path)?;
    let mut config = validate_config(&raw)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    for b in &mut config.boundary {
        if let BoundarySpec::Table { path: Some(p), values } = b {
            let full = resolve(p);
            *values = read_phase_table(&full)?;
            *p = full;
        }
    }
    for p in [&mut config.solver.initial_field, &mut config.solver.initial_field_v]
        .into_iter()
        .flatten()
    {
        *p = resolve(p);
    }
    config.output.dir = resolve(&config.output.dir);
    Ok(config)
}

/// One phase value per line at uniform arclength; `#` starts a comment.
pub fn read_phase_table(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Config(format!("{}: line {}: not a number: {t:?}", path.display(), k + 1)))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Config(format!("{}: phase table is empty", path.display())));
    }
    Ok(values)
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_INVALID_CONFIG,
        Error::Hypothesis { .. } | Error::NoLifting { .. } => EXIT_HYPOTHESIS,
        _ => EXIT_SOLVER_FAILURE,
    }
}

/// Fixed sweep CSV columns.
pub const SWEEP_COLUMNS: [&str; 17] = [
    "epsilon",
    "dirichlet_u",
    "dirichlet_v",
    "potential_combined",
    "potential_u",
    "potential_v",
    "sup_dev_u",
    "sup_dev_v",
    "h1_dist_u",
    "h1_dist_v",
    "residual",
    "steps",
    "identity_1_7",
    "div_residual_u",
    "div_residual_v",
    "omega_set_area_d025",
    "omega_set_area_d010",
];

/// One row of `sweep.csv`. Failed levels carry NaN and an empty `steps`;
/// unavailable divergence residuals are NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub dirichlet_u: f64,
    pub dirichlet_v: f64,
    pub potential_combined: f64,
    pub potential_u: f64,
    pub potential_v: f64,
    pub sup_dev_u: f64,
    pub sup_dev_v: f64,
    pub h1_dist_u: f64,
    pub h1_dist_v: f64,
    pub residual: f64,
    pub steps: Option<u64>,
    pub identity_1_7: f64,
    pub div_residual_u: f64,
    pub div_residual_v: f64,
    pub omega_set_area_d025: f64,
    pub omega_set_area_d010: f64,
}

impl SweepRow {
    pub fn from_level(level: &LevelReport) -> SweepRow {
        let nan = f64::NAN;
        match &level.report {
            Some(r) => SweepRow {
                epsilon: r.epsilon,
                dirichlet_u: r.dirichlet_u,
                dirichlet_v: r.dirichlet_v,
                potential_combined: r.potential_combined,
                potential_u: r.potential_u,
                potential_v: r.potential_v,
                sup_dev_u: r.sup_dev_u,
                sup_dev_v: r.sup_dev_v,
                h1_dist_u: r.h1_dist_u,
                h1_dist_v: r.h1_dist_v,
                residual: r.residual,
                steps: Some(r.steps as u64),
                identity_1_7: r.identity_residual,
                div_residual_u: r.div_residual_u.unwrap_or(nan),
                div_residual_v: r.div_residual_v.unwrap_or(nan),
                omega_set_area_d025: r.omega_area_d025,
                omega_set_area_d010: r.omega_area_d010,
            },
            None => SweepRow {
                epsilon: level.epsilon,
                dirichlet_u: nan,
                dirichlet_v: nan,
                potential_combined: nan,
                potential_u: nan,
                potential_v: nan,
                sup_dev_u: nan,
                sup_dev_v: nan,
                h1_dist_u: nan,
                h1_dist_v: nan,
                residual: nan,
                steps: None,
                identity_1_7: nan,
                div_residual_u: nan,
                div_residual_v: nan,
                omega_set_area_d025: nan,
                omega_set_area_d010: nan,
            },
        }
    }

    /// Rebuilds the report entries the CSV carries; the rest are NaN.
    pub fn to_level(&self) -> LevelReport {
        let finite = |x: f64| (!x.is_nan()).then_some(x);
        let report = self.steps.map(|steps| EnergyReport {
            epsilon: self.epsilon,
            dirichlet_u: self.dirichlet_u,
            dirichlet_v: self.dirichlet_v,
            potential_combined: self.potential_combined,
            potential_u: self.potential_u,
            potential_v: self.potential_v,
            g_energy: self.dirichlet_u + self.dirichlet_v + 0.25 * self.potential_combined,
            sup_dev_u: self.sup_dev_u,
            sup_dev_v: self.sup_dev_v,
            h1_dist_u: self.h1_dist_u,
            h1_dist_v: self.h1_dist_v,
            residual: self.residual,
            steps: steps as usize,
            identity_residual: self.identity_1_7,
            div_residual_u: finite(self.div_residual_u),
            div_residual_v: finite(self.div_residual_v),
            omega_area_d025: self.omega_set_area_d025,
            omega_area_d010: self.omega_set_area_d010,
            grad_potential_norm: f64::NAN,
            max_modulus_u: f64::NAN,
            max_modulus_v: f64::NAN,
            max_modulus_sq_sum: f64::NAN,
            inner_dev_u: f64::NAN,
            inner_dev_v: f64::NAN,
        });
        LevelReport {
            epsilon: self.epsilon,
            failure: report.is_none().then(|| "solve failed".to_string()),
            report,
        }
    }
}

pub fn write_sweep_csv(path: &Path, levels: &[LevelReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for level in levels {
        w.serialize(SweepRow::from_level(level)).map_err(csv_error)?;
    }
    if levels.is_empty() {
        w.write_record(SWEEP_COLUMNS).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<LevelReport>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header != SWEEP_COLUMNS {
        return Err(Error::Format(format!(
            "{}: unexpected columns {header:?}",
            path.display()
        )));
    }
    r.deserialize::<SweepRow>()
        .map(|row| row.map(|r| r.to_level()).map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub label: String,
    pub degree: i64,
    pub smoothness_verified: bool,
    /// `½∫|∇φ|²`.
    pub lifting_energy: f64,
    /// `½∫|∇u₀|²` of the discrete map.
    pub map_energy: f64,
    pub harmonic_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaRecord {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_minus_beta: f64,
    pub constraint_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `reference.json`: everything `gl report` needs besides `sweep.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub problem: Problem,
    pub domain: DomainConfig,
    pub spacing: f64,
    pub residual_tol: f64,
    pub epsilons: Vec<f64>,
    pub boundaries: Vec<BoundaryRecord>,
    pub energies: ReferenceEnergies,
    pub beta: Option<BetaRecord>,
    pub thresholds: Thresholds,
}

/// `verdicts.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub problem: Problem,
    /// `classified`, `insufficient_data` or `not_applicable`.
    pub status: String,
    pub gammas: Option<Gammas>,
    pub verdicts: Vec<Verdict>,
}

impl VerdictDocument {
    pub fn any_inconsistent(&self) -> bool {
        self.verdicts.iter().any(|v| v.outcome == Outcome::Inconsistent)
    }
}

/// Per-level `solves/level_NN.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub epsilon: f64,
    pub converged: bool,
    pub error: Option<String>,
    pub newton_iterations: usize,
    pub report: Option<EnergyReport>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub verdicts: VerdictDocument,
    pub levels: Vec<LevelReport>,
    pub failures: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn boundary_record(g: &BoundaryData, h: &HarmonicLifting) -> BoundaryRecord {
    BoundaryRecord {
        label: g.label().to_string(),
        degree: g.degree(),
        smoothness_verified: g.smoothness_verified(),
        lifting_energy: h.energy,
        map_energy: h.map_energy,
        harmonic_residual: h.residual,
    }
}

fn beta_record(alpha: f64, pair: &ConstrainedPair) -> BetaRecord {
    BetaRecord {
        alpha,
        beta: pair.beta_value,
        alpha_minus_beta: alpha - pair.beta_value,
        constraint_violation: pair.constraint_violation,
        iterations: pair.iterations,
        converged: pair.converged,
    }
}

struct LevelOutput {
    level: LevelReport,
    newton_iterations: usize,
    fields: Vec<ComplexField>,
}

fn failed(epsilon: f64, err: &Error) -> LevelOutput {
    LevelOutput {
        level: LevelReport {
            epsilon,
            report: None,
            failure: Some(err.to_string()),
        },
        newton_iterations: 0,
        fields: vec![],
    }
}

struct Context<'a> {
    config: &'a RunConfig,
    kind: ProblemKind,
    boundary: &'a [BoundaryData],
    lifts: &'a [HarmonicLifting],
}

impl Context<'_> {
    fn solve(&self, epsilon: f64, initial: Option<&[ComplexField]>) -> LevelOutput {
        let cfg = self.config.solver_config(epsilon);
        let attempt = || -> Result<LevelOutput> {
            match self.kind.variant() {
                None => {
                    let sol = solve_gl_with(&self.boundary[0], &self.lifts[0], &cfg, initial.map(|f| &f[0]))?;
                    let report = energy_report(&sol, &self.lifts[0])?;
                    Ok(LevelOutput {
                        level: LevelReport {
                            epsilon,
                            report: Some(report),
                            failure: None,
                        },
                        newton_iterations: sol.newton_iterations,
                        fields: vec![sol.u],
                    })
                }
                Some(variant) => {
                    let sol = solve_pair_with(
                        (&self.boundary[0], &self.boundary[1]),
                        (&self.lifts[0], &self.lifts[1]),
                        &cfg,
                        variant,
                        initial.map(|f| (&f[0], &f[1])),
                    )?;
                    let report = pair_energy_report(&sol, &self.lifts[0], &self.lifts[1])?;
                    Ok(LevelOutput {
                        level: LevelReport {
                            epsilon,
                            report: Some(report),
                            failure: None,
                        },
                        newton_iterations: sol.newton_iterations,
                        fields: vec![sol.u, sol.v],
                    })
                }
            }
        };
        attempt().unwrap_or_else(|e| failed(epsilon, &e))
    }
}

fn initial_fields(
    config: &RunConfig,
    grid: &Arc<Grid>,
    lifts: &[HarmonicLifting],
) -> Result<Option<Vec<ComplexField>>> {
    let paths = [&config.solver.initial_field, &config.solver.initial_field_v];
    if paths.iter().all(|p| p.is_none()) {
        return Ok(None);
    }
    lifts
        .iter()
        .zip(paths)
        .map(|(h, p)| match p {
            Some(p) => read_field(p, grid),
            None => Ok(h.u0.clone()),
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Executes a validated config and writes all artifacts into
/// `config.output.dir`. Errors are returned only for problems that prevent
/// the run from starting (grid, boundary data, I/O); solver failures at
/// individual ε levels are recorded and reflected in the exit code.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let started = Instant::now();
    let out = config.output.dir.clone();
    std::fs::create_dir_all(&out)?;

    let grid = build_grid(config.domain.kind, config.domain.resolution)?;
    let boundary: Vec<BoundaryData> = config
        .boundary
        .iter()
        .map(|spec| {
            let g = make_boundary(spec, &grid)?;
            g.require_degree_zero()?;
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let lifts: Vec<HarmonicLifting> = boundary
        .iter()
        .map(|g| harmonic_lifting(g, &grid, config.beta.harmonic_tol))
        .collect::<Result<_>>()?;

    let mut energies = ReferenceEnergies {
        dirichlet_u0: lifts[0].map_energy,
        ..ReferenceEnergies::default()
    };
    let mut beta = None;
    let mut beta_pair = None;
    if lifts.len() == 2 {
        let alpha = alpha_value(&lifts[0], &lifts[1])?;
        energies.dirichlet_v0 = Some(lifts[1].map_energy);
        energies.alpha = Some(alpha);
        if matches!(config.problem, Problem::SymmetricPair | Problem::BetaMinimizer) {
            let pair = minimize_beta_from(&lifts[0], &lifts[1], &config.beta)?;
            energies.beta = Some(pair.beta_value);
            beta = Some(beta_record(alpha, &pair));
            beta_pair = Some(pair);
        }
    }

    let reference = ReferenceRecord {
        problem: config.problem,
        domain: config.domain.clone(),
        spacing: grid.spacing(),
        residual_tol: config.solver.residual_tol,
        epsilons: config.epsilons.clone(),
        boundaries: boundary
            .iter()
            .zip(&lifts)
            .map(|(g, h)| boundary_record(g, h))
            .collect(),
        energies: energies.clone(),
        beta,
        thresholds: config.thresholds.clone(),
    };
    write_json(&out.join("reference.json"), &reference)?;

    let fields_dir = out.join("fields");
    if config.output.dump_fields {
        std::fs::create_dir_all(&fields_dir)?;
        for (k, h) in lifts.iter().enumerate() {
            write_field(&fields_dir.join(format!("reference_{}.csv", component_name(k))), &h.u0)?;
        }
        if let Some(pair) = &beta_pair {
            write_field(&fields_dir.join("beta_u.csv"), &pair.u_star)?;
            write_field(&fields_dir.join("beta_v.csv"), &pair.v_star)?;
        }
    }

    let (levels, verdicts, failures) = match config.problem.kind() {
        None => {
            let verdicts = match (config.problem, &reference.beta) {
                (Problem::BetaMinimizer, Some(b)) => vec![alpha_beta_verdict(b)],
                _ => vec![],
            };
            let doc = VerdictDocument {
                problem: config.problem,
                status: "not_applicable".into(),
                gammas: None,
                verdicts,
            };
            (vec![], doc, 0)
        }
        Some(kind) => {
            let ctx = Context {
                config,
                kind,
                boundary: &boundary,
                lifts: &lifts,
            };
            let start = initial_fields(config, &grid, &lifts)?;
            let outputs: Vec<LevelOutput> = if config.solver.continuation {
                let mut warm = start;
                let mut outputs = Vec::with_capacity(config.epsilons.len());
                for &eps in &config.epsilons {
                    let o = ctx.solve(eps, warm.as_deref());
                    if !o.fields.is_empty() {
                        warm = Some(o.fields.clone());
                    }
                    outputs.push(o);
                }
                outputs
            } else {
                config
                    .epsilons
                    .par_iter()
                    .map(|&eps| ctx.solve(eps, start.as_deref()))
                    .collect()
            };

            let solves_dir = out.join("solves");
            std::fs::create_dir_all(&solves_dir)?;
            for (idx, o) in outputs.iter().enumerate() {
                let record = SolveRecord {
                    epsilon: o.level.epsilon,
                    converged: o.level.report.is_some(),
                    error: o.level.failure.clone(),
                    newton_iterations: o.newton_iterations,
                    report: o.level.report.clone(),
                };
                write_json(&solves_dir.join(format!("level_{idx:02}.json")), &record)?;
                if config.output.dump_fields {
                    for (k, f) in o.fields.iter().enumerate() {
                        write_field(&fields_dir.join(format!("level_{idx:02}_{}.csv", component_name(k))), f)?;
                    }
                }
            }
            let levels: Vec<LevelReport> = outputs.into_iter().map(|o| o.level).collect();
            let failures = levels.iter().filter(|l| l.report.is_none()).count();
            let doc = classify(&reference, &levels)?;
            (levels, doc, failures)
        }
    };

    write_sweep_csv(&out.join("sweep.csv"), &levels)?;
    write_json(&out.join("verdicts.json"), &verdicts)?;
    write_meta(&out, started)?;

    let exit_code = if failures > 0 {
        EXIT_SOLVER_FAILURE
    } else if verdicts.any_inconsistent() {
        EXIT_INCONSISTENT
    } else {
        EXIT_OK
    };
    Ok(RunSummary {
        exit_code,
        out_dir: out,
        verdicts,
        levels,
        failures,
    })
}

fn component_name(k: usize) -> &'static str {
    if k == 0 {
        "u"
    } else {
        "v"
    }
}

fn alpha_beta_verdict(b: &BetaRecord) -> Verdict {
    let mut margins = std::collections::BTreeMap::new();
    margins.insert("alpha".to_string(), b.alpha);
    margins.insert("beta".to_string(), b.beta);
    margins.insert("alpha_minus_beta".to_string(), b.alpha_minus_beta);
    margins.insert("constraint_violation".to_string(), b.constraint_violation);
    let ok = b.beta <= b.alpha + ALPHA_BETA_TOL;
    Verdict {
        check: "alpha_at_least_beta".into(),
        hypothesis_met: true,
        outcome: if ok { Outcome::Consistent } else { Outcome::Inconsistent },
        detail: if b.alpha_minus_beta < 1e-3 {
            "beta within 1e-3 of alpha (alpha = beta regime probe)".into()
        } else {
            "beta strictly below alpha".into()
        },
        margins,
    }
}

fn classify(reference: &ReferenceRecord, levels: &[LevelReport]) -> Result<VerdictDocument> {
    let Some(kind) = reference.problem.kind() else {
        return Err(Error::Format("problem has no epsilon sweep".into()));
    };
    let sweep = SweepReport {
        problem: kind,
        levels: levels.to_vec(),
        reference: reference.energies.clone(),
        spacing: reference.spacing,
        residual_tol: reference.residual_tol,
    };
    let gammas = Some(sweep.observed_gammas());
    let (status, verdicts) = match classify_sweep(&sweep, &reference.thresholds) {
        Ok(v) => ("classified", v),
        Err(Error::InsufficientData { .. }) => ("insufficient_data", vec![]),
        Err(e) => return Err(e),
    };
    Ok(VerdictDocument {
        problem: reference.problem,
        status: status.into(),
        gammas,
        verdicts,
    })
}

#[derive(Serialize)]
struct RunMeta {
    crate_version: &'static str,
    finished_unix_seconds: u64,
    wall_seconds: f64,
}

fn write_meta(out: &Path, started: Instant) -> Result<()> {
    let meta = RunMeta {
        crate_version: env!("CARGO_PKG_VERSION"),
        finished_unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join("run_meta.json"), &meta)
}

/// Re-derives the verdicts of a finished run from `sweep.csv` and
/// `reference.json`.
pub fn report(run_dir: &Path) -> Result<VerdictDocument> {
    let reference: ReferenceRecord = read_json(&run_dir.join("reference.json"))?;
    match reference.problem.kind() {
        Some(_) => classify(&reference, &read_sweep_csv(&run_dir.join("sweep.csv"))?),
        None => Ok(VerdictDocument {
            problem: reference.problem,
            status: "not_applicable".into(),
            gammas: None,
            verdicts: reference.beta.as_ref().map(alpha_beta_verdict).into_iter().collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
problem = "single"
epsilons = [0.4, 0.2, 0.1]

[domain]
kind = "unit_disk"
resolution = 16

[[boundary]]
type = "cos"
amplitude = 0.5
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = validate_config(MINIMAL).unwrap();
        assert_eq!(c.solver.tau, 0.25 * 0.1 * 0.1);
        assert_eq!(c.solver.max_steps, 20_000);
        assert!(c.solver.newton && c.solver.continuation);
        assert_eq!(c.output.dir, PathBuf::from("gl-run"));
        assert!(!c.output.dump_fields);
        assert_eq!(
            c.boundary,
            vec![BoundarySpec::Cos {
                amplitude: 0.5,
                mode: 1
            }]
        );
    }

    #[test]
    fn increasing_epsilons_are_rejected_with_line() {
        let raw = MINIMAL.replace("[0.4, 0.2, 0.1]", "[0.1, 0.2]");
        let msg = validate_config(&raw).unwrap_err().to_string();
        assert!(msg.contains("epsilons must be strictly decreasing"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn pair_problem_needs_two_boundaries() {
        let raw = MINIMAL.replace("\"single\"", "\"symmetric_pair\"");
        let msg = validate_config(&raw).unwrap_err().to_string();
        assert!(msg.contains("two boundary specs required"), "{msg}");
    }

    #[test]
    fn every_violation_is_listed() {
        let raw = MINIMAL
            .replace("\"single\"", "\"non_symmetric_pair\"")
            .replace("[0.4, 0.2, 0.1]", "[0.1, 0.2]")
            .replace("resolution = 16", "resolution = 4")
            + "\n[solver]\ntau = 1.0\nresidual_tol = 0.0\n";
        let msg = validate_config(&raw).unwrap_err().to_string();
        for needle in [
            "two boundary specs",
            "strictly decreasing",
            "resolution must be",
            "tau = 1",
            "residual_tol",
        ] {
            assert!(msg.contains(needle), "missing {needle:?} in {msg}");
        }
        assert_eq!(msg.lines().count(), 5, "{msg}");
    }

    #[test]
    fn syntax_and_unknown_keys_are_located() {
        let msg = validate_config("problem = \"single\"\nbogus = 3\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("line 2"), "{msg}");
        let msg = validate_config("problem = \n").unwrap_err().to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn overrides_update_automatic_tau() {
        let mut c = validate_config(MINIMAL).unwrap();
        c.apply_overrides(Some(vec![0.2, 0.05]), Some(32), Some("x".into()));
        assert_eq!(c.solver.tau, 0.25 * 0.05 * 0.05);
        assert_eq!(c.domain.resolution, 32);
        c.validate().unwrap();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_INVALID_CONFIG);
        assert_eq!(exit_code(&Error::Hypothesis { degree: 1 }), EXIT_HYPOTHESIS);
        assert_eq!(exit_code(&Error::InsufficientData { levels: 1 }), EXIT_SOLVER_FAILURE);
    }

    #[test]
    fn sweep_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let ok = LevelReport {
            epsilon: 0.2,
            report: Some(EnergyReport {
                epsilon: 0.2,
                dirichlet_u: 0.1,
                dirichlet_v: 0.0,
                potential_combined: 1e-3,
                potential_u: 1e-3,
                potential_v: 0.0,
                g_energy: 0.1 + 0.25e-3,
                sup_dev_u: 0.01,
                sup_dev_v: 0.0,
                h1_dist_u: 0.02,
                h1_dist_v: 0.0,
                residual: 1e-9,
                steps: 7,
                identity_residual: 1e-8,
                div_residual_u: None,
                div_residual_v: None,
                omega_area_d025: 0.0,
                omega_area_d010: 0.5,
                grad_potential_norm: 0.0,
                max_modulus_u: 1.0,
                max_modulus_v: 0.0,
                max_modulus_sq_sum: 1.0,
                inner_dev_u: 0.0,
                inner_dev_v: 0.0,
            }),
            failure: None,
        };
        let bad = LevelReport {
            epsilon: 0.1,
            report: None,
            failure: Some("x".into()),
        };
        write_sweep_csv(&path, &[ok.clone(), bad]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_COLUMNS.join(","));
        let back = read_sweep_csv(&path).unwrap();
        let r = back[0].report.as_ref().unwrap();
        let o = ok.report.as_ref().unwrap();
        assert_eq!(
            (r.dirichlet_u, r.steps, r.div_residual_u),
            (o.dirichlet_u, o.steps, None)
        );
        assert!(back[1].report.is_none());
    }
}
