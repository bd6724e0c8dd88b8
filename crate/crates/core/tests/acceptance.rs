//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use gl_lab::diagnostics::{lifted_bound, EnergyReport, ProblemKind, SweepReport};
use gl_lab::reference::{solve_harmonic, HARMONIC_TOL};
use gl_lab::runner::{run, validate_config, ReferenceRecord, RunSummary};
use gl_lab::{
    alpha_value, build_grid, energy_gradient, gl_energy, harmonic_lifting, make_boundary, minimize_beta, pair_energy,
    pair_gradient, BetaConfig, BoundarySpec, ComplexField, DomainKind, Grid, Variant,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

struct Sweep {
    summary: RunSummary,
    reference: ReferenceRecord,
    elapsed: Duration,
}

impl Sweep {
    fn reports(&self) -> Vec<&EnergyReport> {
        self.summary.levels.iter().filter_map(|l| l.report.as_ref()).collect()
    }

    fn all_converged(&self) -> bool {
        self.summary.failures == 0 && !self.summary.levels.is_empty()
    }

    fn sweep_report(&self, problem: ProblemKind) -> SweepReport {
        SweepReport {
            problem,
            levels: self.summary.levels.clone(),
            reference: self.reference.energies.clone(),
            spacing: self.reference.spacing,
            residual_tol: self.reference.residual_tol,
        }
    }
}

fn config_text(problem: &str, resolution: usize, boundaries: &[&str], extra: &str) -> String {
    let mut s = format!(
        "problem = \"{problem}\"\nepsilons = [0.4, 0.2, 0.1, 0.05]\n{extra}\n[domain]\nkind = \"unit_disk\"\nresolution = {resolution}\n"
    );
    for b in boundaries {
        s.push_str(&format!("\n[[boundary]]\n{b}\n"));
    }
    s
}

fn run_in(text: &str, out: &Path) -> Sweep {
    let mut cfg = validate_config(text).expect("acceptance config is valid");
    cfg.output.dir = out.to_path_buf();
    let start = Instant::now();
    let summary = run(&cfg).expect("run starts");
    let elapsed = start.elapsed();
    let reference = serde_json::from_str(&std::fs::read_to_string(out.join("reference.json")).unwrap()).unwrap();
    Sweep {
        summary,
        reference,
        elapsed,
    }
}

const COS: &str = "type = \"cos\"\namplitude = 0.5";
const SIN: &str = "type = \"sin\"\namplitude = 0.5";

fn series(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Decreasing by at most 5% per level, and at least 5x overall.
fn co_decays(series: &[f64]) -> bool {
    series.windows(2).all(|w| w[1] <= 1.05 * w[0]) && series[0] >= 5.0 * series[series.len() - 1]
}

fn harmonic_oracle() -> Check {
    let mut errors = Vec::new();
    let mut energy64 = f64::NAN;
    let mut slowest = Duration::ZERO;
    for n in [64, 128] {
        let grid = build_grid(DomainKind::UnitDisk, n).unwrap();
        let phi0: Vec<f64> = grid.boundary_angles().iter().map(|t| 0.5 * t.cos()).collect();
        let start = Instant::now();
        let h = solve_harmonic(&phi0, &grid, HARMONIC_TOL).unwrap();
        slowest = slowest.max(start.elapsed());
        let err = h
            .phi
            .values()
            .iter()
            .zip(grid.coords())
            .map(|(p, [x, _])| (p - 0.5 * x).abs())
            .fold(0.0, f64::max);
        errors.push(err);
        if n == 64 {
            energy64 = h.energy;
        }
    }
    let exact = PI / 8.0;
    let rel = (energy64 - exact).abs() / exact;
    let ratio = errors[0] / errors[1];
    check(
        rel <= 0.02 && (3.0..=5.0).contains(&ratio) && slowest < Duration::from_secs(10),
        format!(
            "energy {energy64:.6} vs pi/8 (rel {rel:.2e}); errors {:.2e} -> {:.2e}, ratio {ratio:.2}; slowest solve {:.2}s",
            errors[0],
            errors[1],
            slowest.as_secs_f64()
        ),
    )
}

/// `⟨grad, w⟩` in the grid's L² pairing.
fn pairing(grid: &Grid, g: &[Complex64], w: &[Complex64]) -> f64 {
    g.iter()
        .zip(w)
        .zip(grid.areas())
        .map(|((a, b), m)| m * (a.conj() * b).re)
        .sum()
}

fn random_direction(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> ComplexField {
    let mut w = ComplexField::zeros(grid);
    for &i in grid.interior() {
        w.values_mut()[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    w
}

fn shifted(z: &ComplexField, w: &ComplexField, t: f64) -> ComplexField {
    let values = z.values().iter().zip(w.values()).map(|(a, b)| a + b * t).collect();
    ComplexField::from_values(z.grid(), values).unwrap()
}

fn gradient_check() -> Check {
    const STEP: f64 = 1e-5;
    let grid = build_grid(DomainKind::UnitSquare, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let base = |rng: &mut ChaCha8Rng, phase: f64| {
        ComplexField::from_fn(&grid, |x, y| {
            Complex64::from_polar(
                0.8 + 0.3 * rng.gen::<f64>(),
                phase * (x + 2.0 * y) + rng.gen_range(-0.2..0.2),
            )
        })
    };
    let u = base(&mut rng, 1.0);
    let v = base(&mut rng, -0.7);
    let mut worst: f64 = 0.0;
    for eps in [1.0, 0.1] {
        let g = energy_gradient(&u, eps);
        let (gu, gv) = pair_gradient(&u, &v, eps, Variant::Symmetric).unwrap();
        let (nu, nv) = pair_gradient(&u, &v, eps, Variant::NonSymmetric).unwrap();
        for _ in 0..20 {
            let w = random_direction(&grid, &mut rng);
            let fd = (gl_energy(&shifted(&u, &w, STEP), eps) - gl_energy(&shifted(&u, &w, -STEP), eps)) / (2.0 * STEP);
            let an = pairing(&grid, g.values(), w.values());
            worst = worst.max((an - fd).abs() / (an.abs() + 1e-12));

            let wv = random_direction(&grid, &mut rng);
            for (variant, (a, b)) in [(Variant::Symmetric, (&gu, &gv)), (Variant::NonSymmetric, (&nu, &nv))] {
                let f = |t: f64| pair_energy(&shifted(&u, &w, t), &shifted(&v, &wv, t), eps, variant).unwrap();
                let fd = (f(STEP) - f(-STEP)) / (2.0 * STEP);
                let an = pairing(&grid, a.values(), w.values()) + pairing(&grid, b.values(), wv.values());
                worst = worst.max((an - fd).abs() / (an.abs() + 1e-12));
            }
        }
    }
    check(
        worst <= 1e-5,
        format!("worst relative error {worst:.2e} over 120 directional derivatives"),
    )
}

fn maximum_principle(single: &Sweep) -> Check {
    let h = single.reference.spacing;
    let bound = 1.0 + 10.0 * h * h;
    let maxes: Vec<f64> = single.reports().iter().map(|r| r.max_modulus_u).collect();
    let violations = maxes.iter().filter(|&&m| m > bound).count();
    check(
        single.all_converged() && violations == 0,
        format!("max |u| per level {maxes:.6?} vs bound {bound:.6}; {violations} violation(s)"),
    )
}

fn co_decay(single: &Sweep) -> Check {
    let reports = single.reports();
    let potential: Vec<f64> = reports.iter().map(|r| r.potential_u).collect();
    let h1: Vec<f64> = reports.iter().map(|r| r.h1_dist_u).collect();
    let fast = single.elapsed < Duration::from_secs(300);
    check(
        single.all_converged() && co_decays(&potential) && co_decays(&h1) && fast,
        format!(
            "potential {}; h1 {}; sweep {:.1}s",
            series(&potential),
            series(&h1),
            single.elapsed.as_secs_f64()
        ),
    )
}

fn energy_threshold(single: &Sweep) -> Check {
    let reports = single.reports();
    let e0 = single.reference.energies.dirichlet_u0;
    let tol = 0.05 * (1.0 + e0);
    let last = reports.last().map_or(f64::NAN, |r| r.dirichlet_u);
    let min = reports.iter().map(|r| r.dirichlet_u).fold(f64::INFINITY, f64::min);
    check(
        single.all_converged() && (last - e0).abs() <= tol && min >= e0 - tol,
        format!("E0 {e0:.6}; dirichlet at smallest eps {last:.6}; sweep min {min:.6}; tolerance {tol:.4}"),
    )
}

/// Every level stays within `1.2×` the largest-ε value.
fn bounded_by_first(series: &[f64]) -> bool {
    series.iter().all(|&x| x <= 1.2 * series[0])
}

fn pohozaev(single: &Sweep) -> Check {
    let gamma: Vec<f64> = single.reports().iter().map(|r| r.potential_u).collect();
    check(
        single.all_converged() && bounded_by_first(&gamma),
        format!("observed gamma0 per level {}", series(&gamma)),
    )
}

fn pair_modulus_bounds(sym: &Sweep, nonsym: &Sweep) -> Check {
    let h = sym.reference.spacing;
    let slack = 10.0 * h * h;
    let sym_max = sym.reports().iter().map(|r| r.max_modulus_sq_sum).fold(0.0, f64::max);
    let ns = nonsym.reports();
    let u_max = ns.iter().map(|r| r.max_modulus_u.powi(2)).fold(0.0, f64::max);
    let v_max = ns.iter().map(|r| r.max_modulus_v.powi(2)).fold(0.0, f64::max);
    check(
        sym.all_converged()
            && nonsym.all_converged()
            && sym_max <= 2.0 + slack
            && u_max <= 1.5 + slack
            && v_max <= 2.0 + slack,
        format!(
            "symmetric max(|u|^2+|v|^2) {sym_max:.6}; non-symmetric max|u|^2 {u_max:.6}, max|v|^2 {v_max:.6}; slack {slack:.2e}"
        ),
    )
}

/// Gauss–Seidel over nodes: each interior `(u_i, v_i)` in turn becomes the
/// exact minimizer `√2·b/|b|`, `b = Σ w_ij (u_j, v_j)`, of the energy with
/// all other nodes fixed.
fn coordinate_descent_beta(grid: &Grid, u: &mut [Complex64], v: &mut [Complex64]) -> f64 {
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for &i in grid.interior() {
            let (mut bu, mut bv) = (Complex64::default(), Complex64::default());
            for (j, w) in grid.neighbours(i) {
                bu += u[j] * w;
                bv += v[j] * w;
            }
            let norm = (bu.norm_sqr() + bv.norm_sqr()).sqrt();
            let s = 2f64.sqrt() / norm;
            change = change.max((bu * s - u[i]).norm()).max((bv * s - v[i]).norm());
            u[i] = bu * s;
            v[i] = bv * s;
        }
        if change < 1e-13 {
            break;
        }
    }
    grid.dirichlet_sum(u) + grid.dirichlet_sum(v)
}

fn alpha_beta() -> Check {
    let pairs = [
        (
            BoundarySpec::Cos {
                amplitude: 0.5,
                mode: 1,
            },
            BoundarySpec::Sin {
                amplitude: 0.5,
                mode: 1,
            },
        ),
        (
            BoundarySpec::Cos {
                amplitude: 0.8,
                mode: 1,
            },
            BoundarySpec::Constant { phase: 0.0 },
        ),
        (
            BoundarySpec::Sin {
                amplitude: 0.6,
                mode: 2,
            },
            BoundarySpec::Cos {
                amplitude: 0.4,
                mode: 1,
            },
        ),
        (
            BoundarySpec::SinArclength {
                amplitude: 0.7,
                mode: 1,
            },
            BoundarySpec::Cos {
                amplitude: 0.7,
                mode: 1,
            },
        ),
        (
            BoundarySpec::Cos {
                amplitude: 1.0,
                mode: 1,
            },
            BoundarySpec::Cos {
                amplitude: -1.0,
                mode: 1,
            },
        ),
    ];
    let grid = build_grid(DomainKind::UnitDisk, 16).unwrap();
    let cfg = BetaConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (a, b) in &pairs {
        let g1 = make_boundary(a, &grid).unwrap();
        let g2 = make_boundary(b, &grid).unwrap();
        let h1 = harmonic_lifting(&g1, &grid, HARMONIC_TOL).unwrap();
        let h2 = harmonic_lifting(&g2, &grid, HARMONIC_TOL).unwrap();
        let alpha = alpha_value(&h1, &h2).unwrap();
        let beta = minimize_beta(&g1, &g2, &grid, &cfg).unwrap().beta_value;
        ok &= beta <= alpha + 1e-6;
        lines.push(format!("{alpha:.5}>={beta:.5}"));
    }

    let small = build_grid(DomainKind::UnitSquare, 8).unwrap();
    // a pair with β strictly below α, so the minimizer has to move off (u₀, v₀)
    let g1 = make_boundary(&pairs[1].0, &small).unwrap();
    let g2 = make_boundary(&pairs[1].1, &small).unwrap();
    let pair = minimize_beta(&g1, &g2, &small, &cfg).unwrap();
    let h1 = harmonic_lifting(&g1, &small, HARMONIC_TOL).unwrap();
    let h2 = harmonic_lifting(&g2, &small, HARMONIC_TOL).unwrap();
    let (mut u, mut v) = (h1.u0.values().to_vec(), h2.u0.values().to_vec());
    let small_alpha = alpha_value(&h1, &h2).unwrap();
    let oracle = coordinate_descent_beta(&small, &mut u, &mut v);
    let rel = (pair.beta_value - oracle).abs() / oracle;
    ok &= rel <= 1e-3 && oracle < small_alpha;
    check(
        ok,
        format!(
            "alpha>=beta on 5 pairs [{}]; 8x8 beta {:.8} vs coordinate descent {oracle:.8} (rel {rel:.1e}, alpha {small_alpha:.6})",
            lines.join(", "),
            pair.beta_value
        ),
    )
}

fn lifted_residuals(sweeps: &[(&Sweep, ProblemKind)]) -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (sweep, kind) in sweeps {
        let bound = lifted_bound(&sweep.sweep_report(*kind));
        let mut div: f64 = 0.0;
        let mut ident: f64 = 0.0;
        for r in sweep.reports() {
            div = div
                .max(r.div_residual_u.unwrap_or(0.0))
                .max(r.div_residual_v.unwrap_or(0.0));
            ident = ident.max(r.identity_residual);
        }
        let lifted = sweep
            .reports()
            .iter()
            .filter(|r| r.div_residual_u.is_some() && (!kind.is_pair() || r.div_residual_v.is_some()))
            .count();
        ok &= sweep.all_converged() && lifted == sweep.reports().len() && div <= bound && ident <= bound;
        parts.push(format!(
            "{kind:?}: div {div:.1e}, identity {ident:.1e}, bound {bound:.3}"
        ));
    }
    check(ok, parts.join("; "))
}

fn non_symmetric_potentials(nonsym: &Sweep) -> Check {
    let reports = nonsym.reports();
    let pu: Vec<f64> = reports.iter().map(|r| r.potential_u).collect();
    let pv: Vec<f64> = reports.iter().map(|r| r.potential_v).collect();
    check(
        nonsym.all_converged() && bounded_by_first(&pu) && bounded_by_first(&pv),
        format!("potential_u {}; potential_v {}", series(&pu), series(&pv)),
    )
}

fn data_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "run_meta.json") {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism(root: &Path) -> Check {
    let mut ok = true;
    let mut compared = 0;
    for (problem, continuation) in [("symmetric_pair", false), ("single", true)] {
        let text = config_text(problem, 24, if problem == "single" { &[COS] } else { &[COS, SIN] }, "")
            + &format!("\n[solver]\ncontinuation = {continuation}\n\n[output]\ndump_fields = true\n");
        let a = root.join(format!("det_{problem}_a"));
        let b = root.join(format!("det_{problem}_b"));
        run_in(&text, &a);
        run_in(&text, &b);
        let files = data_files(&a);
        ok &= files == data_files(&b) && !files.is_empty();
        for f in &files {
            ok &= std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap();
            compared += 1;
        }
    }
    check(
        ok,
        format!("{compared} CSV/JSON artifacts compared byte for byte across two runs each"),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let single = run_in(&config_text("single", 64, &[COS], ""), &root.join("single"));
    let sym = run_in(&config_text("symmetric_pair", 64, &[COS, SIN], ""), &root.join("sym"));
    let nonsym = run_in(
        &config_text("non_symmetric_pair", 64, &[COS, SIN], ""),
        &root.join("nonsym"),
    );

    let results = [
        ("harmonic oracle", harmonic_oracle()),
        ("gradient correctness", gradient_check()),
        ("maximum principle", maximum_principle(&single)),
        ("potential and H1 co-decay", co_decay(&single)),
        ("energy threshold", energy_threshold(&single)),
        ("Pohozaev boundedness", pohozaev(&single)),
        ("pair modulus bounds", pair_modulus_bounds(&sym, &nonsym)),
        ("alpha >= beta", alpha_beta()),
        (
            "lifted-system residuals",
            lifted_residuals(&[
                (&single, ProblemKind::Single),
                (&sym, ProblemKind::SymmetricPair),
                (&nonsym, ProblemKind::NonSymmetricPair),
            ]),
        ),
        ("non-symmetric component potentials", non_symmetric_potentials(&nonsym)),
        ("determinism", determinism(root)),
    ];

    let mut failed = 0;
    for (k, (name, c)) in results.iter().enumerate() {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{:>2}] {name}: {}", k + 1, c.detail);
        failed += usize::from(!c.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
