//! S¹-valued boundary maps, their winding degree and their phase lifting.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Largest phase jump between consecutive samples before the boundary is
/// considered under-resolved.
pub const MAX_PHASE_JUMP: f64 = PI / 2.0;

const UNIT_TOL: f64 = 1e-12;

fn one() -> u32 {
    1
}

/// Generator catalog for boundary data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// `g ≡ e^{i phase}`.
    Constant {
        #[serde(default)]
        phase: f64,
    },
    /// `φ₀(θ) = amplitude · cos(mode · θ)`.
    Cos {
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
    /// `φ₀(θ) = amplitude · sin(mode · θ)`.
    Sin {
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
    /// `φ₀(s) = amplitude · sin(2π · mode · s)` with `s` the normalized arclength.
    SinArclength {
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
    /// Phase values at uniform arclength, linearly interpolated (periodic).
    /// `path` is resolved into `values` by the runner.
    Table {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        values: Vec<f64>,
    },
    /// `g(θ) = e^{i degree θ}`, sampled directly rather than through a phase.
    Winding { degree: i64 },
}

impl BoundarySpec {
    pub fn label(&self) -> String {
        match self {
            BoundarySpec::Constant { phase } => format!("constant({phase})"),
            BoundarySpec::Cos { amplitude, mode } => format!("{amplitude}*cos({mode}*theta)"),
            BoundarySpec::Sin { amplitude, mode } => format!("{amplitude}*sin({mode}*theta)"),
            BoundarySpec::SinArclength { amplitude, mode } => {
                format!("{amplitude}*sin(2*pi*{mode}*s)")
            }
            BoundarySpec::Table { path, values } => match path {
                Some(p) => format!("table({})", p.display()),
                None => format!("table[{}]", values.len()),
            },
            BoundarySpec::Winding { degree } => format!("exp(i*{degree}*theta)"),
        }
    }

    fn parameters_finite(&self) -> bool {
        match self {
            BoundarySpec::Constant { phase } => phase.is_finite(),
            BoundarySpec::Cos { amplitude, .. }
            | BoundarySpec::Sin { amplitude, .. }
            | BoundarySpec::SinArclength { amplitude, .. } => amplitude.is_finite(),
            BoundarySpec::Table { values, .. } => values.iter().all(|v| v.is_finite()),
            BoundarySpec::Winding { .. } => true,
        }
    }
}

/// Boundary samples in the grid's counterclockwise boundary order.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    samples: Vec<Complex64>,
    degree: i64,
    lifting: Option<Vec<f64>>,
    label: String,
    smoothness_verified: bool,
}

impl BoundaryData {
    /// Validates unit modulus and computes degree and (when the degree is
    /// zero) the lifting.
    pub fn from_samples(grid: &Grid, samples: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        grid.check_len_boundary(samples.len())?;
        if let Some((k, z)) = samples
            .iter()
            .enumerate()
            .find(|(_, z)| !z.re.is_finite() || !z.im.is_finite() || (z.norm() - 1.0).abs() > UNIT_TOL)
        {
            return Err(Error::Config(format!(
                "boundary sample {k} has modulus {} (must be 1)",
                z.norm()
            )));
        }
        let degree = winding_degree(&samples)?;
        let lifting = if degree == 0 {
            Some(unwrap_phase(&samples))
        } else {
            None
        };
        Ok(BoundaryData {
            samples,
            degree,
            lifting,
            label: label.into(),
            smoothness_verified: true,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn lifting(&self) -> Option<&[f64]> {
        self.lifting.as_deref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// False for tabulated data, which is only known to be Lipschitz.
    pub fn smoothness_verified(&self) -> bool {
        self.smoothness_verified
    }

    /// Fails with the hypothesis error unless the degree is zero.
    pub fn require_degree_zero(&self) -> Result<&[f64]> {
        match &self.lifting {
            Some(l) if self.degree == 0 => Ok(l),
            _ => Err(Error::Hypothesis { degree: self.degree }),
        }
    }
}

impl Grid {
    fn check_len_boundary(&self, found: usize) -> Result<()> {
        if found == self.boundary().len() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.boundary().len(),
                found,
            })
        }
    }
}

/// Samples the generator on the grid's boundary nodes.
pub fn make_boundary(spec: &BoundarySpec, grid: &Grid) -> Result<BoundaryData> {
    if !spec.parameters_finite() {
        return Err(Error::Config(format!(
            "boundary generator {} has non-finite parameters",
            spec.label()
        )));
    }
    let angles = grid.boundary_angles();
    let arclength = grid.boundary_arclength();
    let phase_of = |phases: Vec<f64>| phases.into_iter().map(|p| Complex64::from_polar(1.0, p)).collect();

    let samples: Vec<Complex64> = match spec {
        BoundarySpec::Constant { phase } => phase_of(vec![*phase; angles.len()]),
        BoundarySpec::Cos { amplitude, mode } => {
            phase_of(angles.iter().map(|t| amplitude * (*mode as f64 * t).cos()).collect())
        }
        BoundarySpec::Sin { amplitude, mode } => {
            phase_of(angles.iter().map(|t| amplitude * (*mode as f64 * t).sin()).collect())
        }
        BoundarySpec::SinArclength { amplitude, mode } => phase_of(
            arclength
                .iter()
                .map(|s| amplitude * (TAU * *mode as f64 * s).sin())
                .collect(),
        ),
        BoundarySpec::Table { values, .. } => {
            if values.is_empty() {
                return Err(Error::Config("boundary table is empty".into()));
            }
            phase_of(arclength.iter().map(|&s| periodic_interp(values, s)).collect())
        }
        BoundarySpec::Winding { degree } => phase_of(angles.iter().map(|t| *degree as f64 * t).collect()),
    };

    let mut data = BoundaryData::from_samples(grid, samples, spec.label())?;
    data.smoothness_verified = !matches!(spec, BoundarySpec::Table { .. });
    Ok(data)
}

fn periodic_interp(values: &[f64], s: f64) -> f64 {
    let n = values.len();
    let t = s.rem_euclid(1.0) * n as f64;
    let k = (t.floor() as usize).min(n - 1);
    let frac = t - k as f64;
    values[k] * (1.0 - frac) + values[(k + 1) % n] * frac
}

/// Principal-branch phase increment from `a` to `b`, in `(-π, π]`.
fn increment(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

/// Winding number of a closed, ordered sample sequence.
pub fn winding_degree(samples: &[Complex64]) -> Result<i64> {
    let n = samples.len();
    let mut total = 0.0;
    for k in 0..n {
        let next = (k + 1) % n;
        let jump = increment(samples[k], samples[next]);
        if jump.abs() >= MAX_PHASE_JUMP {
            return Err(Error::UnderResolvedBoundary { index: k, next, jump });
        }
        total += jump;
    }
    Ok((total / TAU).round() as i64)
}

/// Degree of the boundary map.
pub fn boundary_degree(b: &BoundaryData) -> Result<i64> {
    winding_degree(&b.samples)
}

fn unwrap_phase(samples: &[Complex64]) -> Vec<f64> {
    let mut phase = Vec::with_capacity(samples.len());
    let mut current = samples[0].arg();
    phase.push(current);
    for w in samples.windows(2) {
        current += increment(w[0], w[1]);
        phase.push(current);
    }
    phase
}

/// Continuous phase `φ₀` with `g = e^{iφ₀}`, anchored so that `φ₀` at boundary
/// node 0 lies in `(-π, π]`.
pub fn lift_boundary(b: &BoundaryData) -> Result<Vec<f64>> {
    let degree = boundary_degree(b)?;
    if degree != 0 {
        return Err(Error::NoLifting { degree });
    }
    Ok(unwrap_phase(&b.samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainKind};
    use proptest::prelude::*;

    fn disk() -> std::sync::Arc<Grid> {
        build_grid(DomainKind::UnitDisk, 16).unwrap()
    }

    #[test]
    fn constant_boundary() {
        let g = make_boundary(&BoundarySpec::Constant { phase: 0.0 }, &disk()).unwrap();
        assert_eq!(g.degree(), 0);
        assert!(g.samples().iter().all(|z| *z == Complex64::new(1.0, 0.0)));
        assert!(lift_boundary(&g).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn cos_boundary_lifts_to_its_phase() {
        let grid = disk();
        let g = make_boundary(
            &BoundarySpec::Cos {
                amplitude: 0.5,
                mode: 1,
            },
            &grid,
        )
        .unwrap();
        assert_eq!(g.degree(), 0);
        let lift = lift_boundary(&g).unwrap();
        let max = lift.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        assert!((max - 0.5).abs() < 1e-12);
        for (p, t) in lift.iter().zip(grid.boundary_angles()) {
            assert!((p - 0.5 * t.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn winding_boundaries() {
        let grid = disk();
        let g = make_boundary(&BoundarySpec::Winding { degree: 1 }, &grid).unwrap();
        assert_eq!(g.degree(), 1);
        assert!(matches!(lift_boundary(&g), Err(Error::NoLifting { degree: 1 })));
        assert!(g.require_degree_zero().is_err());
        let g2 = make_boundary(&BoundarySpec::Winding { degree: 2 }, &grid).unwrap();
        assert_eq!(boundary_degree(&g2).unwrap(), 2);
        let gi = make_boundary(&BoundarySpec::Constant { phase: PI / 2.0 }, &grid).unwrap();
        assert_eq!(gi.degree(), 0);
    }

    #[test]
    fn oscillating_phase_has_degree_zero() {
        // brute-force phase-increment sum at 10⁴ samples
        let samples: Vec<Complex64> = (0..10_000)
            .map(|k| {
                let t = TAU * k as f64 / 10_000.0;
                Complex64::from_polar(1.0, 0.3 * (3.0 * t).sin())
            })
            .collect();
        assert_eq!(winding_degree(&samples).unwrap(), 0);
        let g = make_boundary(
            &BoundarySpec::Sin {
                amplitude: 0.3,
                mode: 3,
            },
            &disk(),
        )
        .unwrap();
        assert_eq!(g.degree(), 0);
    }

    #[test]
    fn under_resolved_boundary_is_rejected() {
        let grid = build_grid(DomainKind::UnitDisk, 8).unwrap();
        let res = make_boundary(&BoundarySpec::Winding { degree: 9 }, &grid);
        assert!(matches!(res, Err(Error::UnderResolvedBoundary { .. })));
    }

    #[test]
    fn rejects_non_finite_and_non_unit() {
        let grid = disk();
        let res = make_boundary(
            &BoundarySpec::Cos {
                amplitude: f64::NAN,
                mode: 1,
            },
            &grid,
        );
        assert!(matches!(res, Err(Error::Config(_))));
        let bad = vec![Complex64::new(1.1, 0.0); grid.boundary().len()];
        assert!(BoundaryData::from_samples(&grid, bad, "bad").is_err());
    }

    #[test]
    fn table_is_flagged() {
        let grid = build_grid(DomainKind::UnitSquare, 8).unwrap();
        let spec = BoundarySpec::Table {
            path: None,
            values: vec![0.0, 0.2, 0.4, 0.2],
        };
        let g = make_boundary(&spec, &grid).unwrap();
        assert!(!g.smoothness_verified());
        assert_eq!(g.degree(), 0);
        let sin = make_boundary(
            &BoundarySpec::SinArclength {
                amplitude: 0.3,
                mode: 2,
            },
            &grid,
        )
        .unwrap();
        assert!(sin.smoothness_verified());
    }

    fn phase_samples(n: usize, degree: i64, amp: f64, mode: f64) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                Complex64::from_polar(1.0, degree as f64 * t + amp * (mode * t).sin())
            })
            .collect()
    }

    proptest! {
        #[test]
        fn degree_invariant_under_rotation(degree in -3i64..=3, amp in 0.0..1.0f64, shift in 0usize..256) {
            let mut s = phase_samples(256, degree, amp, 2.0);
            prop_assert_eq!(winding_degree(&s).unwrap(), degree);
            s.rotate_left(shift);
            prop_assert_eq!(winding_degree(&s).unwrap(), degree);
        }

        #[test]
        fn degree_is_additive(d1 in -2i64..=2, d2 in -2i64..=2, a1 in 0.0..0.8f64, a2 in 0.0..0.8f64) {
            let g = phase_samples(512, d1, a1, 1.0);
            let h = phase_samples(512, d2, a2, 3.0);
            let gh: Vec<Complex64> = g.iter().zip(&h).map(|(a, b)| a * b).collect();
            prop_assert_eq!(
                winding_degree(&gh).unwrap(),
                winding_degree(&g).unwrap() + winding_degree(&h).unwrap()
            );
        }

        #[test]
        fn lifting_reproduces_samples(amp in 0.0..3.0f64, mode in 1u32..4, offset in -3.0..3.0f64) {
            let grid = build_grid(DomainKind::UnitDisk, 16).unwrap();
            let samples: Vec<Complex64> = grid
                .boundary_angles()
                .iter()
                .map(|t| Complex64::from_polar(1.0, offset + amp * (mode as f64 * t).cos()))
                .collect();
            let b = BoundaryData::from_samples(&grid, samples, "prop").unwrap();
            let lift = lift_boundary(&b).unwrap();
            prop_assert!(lift[0] > -PI && lift[0] <= PI);
            prop_assert!((lift[lift.len() - 1] - lift[0]).abs() < PI);
            for (p, z) in lift.iter().zip(b.samples()) {
                prop_assert!((Complex64::from_polar(1.0, *p) - z).norm() <= 1e-10);
            }
        }
    }
}
