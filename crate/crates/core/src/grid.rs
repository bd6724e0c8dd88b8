//! Discrete star-shaped domains.
//!
//! Both domain kinds are represented the same way: a node numbering, a dual
//! (control-volume) area per node and a symmetric list of edge weights
//! `w_e = |dual face| / |edge|`. The discrete Laplacian at an interior node is
//!
//! ```text
//! (Δ_h f)_i = (1 / A_i) Σ_j w_ij (f_j - f_i)
//! ```
//!
//! and the discrete Dirichlet energy is `½ Σ_e w_e |f_j - f_i|²`. The two are
//! exactly adjoint, so the area-weighted L² gradient of the discrete energy
//! is `-Δ_h` at every interior node.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted resolution for either domain kind.
pub const MIN_RESOLUTION: usize = 8;

/// Angular nodes per radial interval on the disk.
pub const ANGULAR_FACTOR: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    UnitSquare,
    UnitDisk,
}

impl DomainKind {
    /// Exact area of the continuous domain.
    pub fn area(self) -> f64 {
        match self {
            DomainKind::UnitSquare => 1.0,
            DomainKind::UnitDisk => PI,
        }
    }

    /// Centre about which the domain is star-shaped.
    pub fn centre(self) -> [f64; 2] {
        match self {
            DomainKind::UnitSquare => [0.5, 0.5],
            DomainKind::UnitDisk => [0.0, 0.0],
        }
    }
}

/// Values that can live on grid nodes: reals and complex numbers.
pub trait NodeValue:
    Copy
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + Send
    + Sync
    + std::fmt::Debug
{
    /// Real inner product (`Re(conj(a) b)` for complex values).
    fn re_dot(self, other: Self) -> f64;

    fn mag2(self) -> f64 {
        self.re_dot(self)
    }

    fn mag(self) -> f64 {
        self.mag2().sqrt()
    }
}

impl NodeValue for f64 {
    #[inline]
    fn re_dot(self, other: Self) -> f64 {
        self * other
    }
}

impl NodeValue for Complex64 {
    #[inline]
    fn re_dot(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
}

/// An immutable discretization of the unit square or the unit disk.
#[derive(Debug)]
pub struct Grid {
    kind: DomainKind,
    resolution: usize,
    coords: Vec<[f64; 2]>,
    on_boundary: Vec<bool>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    boundary_arclength: Vec<f64>,
    areas: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    adj_start: Vec<usize>,
    adj_node: Vec<usize>,
    adj_weight: Vec<f64>,
    weight_sum: Vec<f64>,
    spacing: f64,
}

/// Builds a grid; see [`Grid::new`].
pub fn build_grid(kind: DomainKind, resolution: usize) -> Result<Arc<Grid>> {
    Grid::new(kind, resolution)
}

impl Grid {
    /// Unit square: `resolution` interior points per axis on a uniform lattice
    /// including the boundary. Unit disk: polar tensor grid with `resolution`
    /// radial intervals, `4 * resolution` angles and a single axis node.
    pub fn new(kind: DomainKind, resolution: usize) -> Result<Arc<Self>> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
            )));
        }
        let raw = match kind {
            DomainKind::UnitSquare => RawGrid::square(resolution),
            DomainKind::UnitDisk => RawGrid::disk(resolution),
        };
        Ok(Arc::new(raw.finish(kind, resolution)))
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Boundary nodes, counterclockwise, each exactly once.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.on_boundary[node]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbours of `node` with their edge weights.
    pub fn neighbours(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.adj_start[node]..self.adj_start[node + 1];
        self.adj_node[range.clone()]
            .iter()
            .copied()
            .zip(self.adj_weight[range].iter().copied())
    }

    /// `Σ_j w_ij` for each node.
    pub fn weight_sums(&self) -> &[f64] {
        &self.weight_sum
    }

    /// Largest edge length; the `h` in every `O(h²)` tolerance.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Normalized arclength `s ∈ [0, 1)` of each boundary node, in boundary order.
    pub fn boundary_arclength(&self) -> &[f64] {
        &self.boundary_arclength
    }

    /// Polar angle of each boundary node about the domain centre, in boundary order.
    pub fn boundary_angles(&self) -> Vec<f64> {
        let [cx, cy] = self.kind.centre();
        self.boundary
            .iter()
            .map(|&b| {
                let [x, y] = self.coords[b];
                (y - cy).atan2(x - cx)
            })
            .collect()
    }

    /// Two grids are interchangeable when they were built with the same kind and resolution.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.kind == other.kind && self.resolution == other.resolution
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.len(),
                found,
            })
        }
    }

    /// `out_i = Σ_j w_ij (x_i - x_j)` on interior rows, zero on boundary rows.
    pub fn stiffness_apply<T: NodeValue>(&self, x: &[T], out: &mut [T]) {
        self.shifted_apply(0.0, 1.0, x, out);
    }

    /// `out_i = mass · A_i x_i + stiff · Σ_j w_ij (x_i - x_j)` on interior rows,
    /// zero on boundary rows.
    pub fn shifted_apply<T: NodeValue>(&self, mass: f64, stiff: f64, x: &[T], out: &mut [T]) {
        for v in out.iter_mut() {
            *v = T::default();
        }
        for &i in &self.interior {
            let xi = x[i];
            let mut acc = T::default();
            for (j, w) in self.neighbours(i) {
                acc += (xi - x[j]) * w;
            }
            out[i] = xi * (mass * self.areas[i]) + acc * stiff;
        }
    }

    /// Discrete Laplacian on interior rows, zero on boundary rows.
    pub fn laplacian_into<T: NodeValue>(&self, x: &[T], out: &mut [T]) {
        self.stiffness_apply(x, out);
        for &i in &self.interior {
            out[i] = out[i] * (-1.0 / self.areas[i]);
        }
    }

    /// `Σ_i A_i f_i`.
    pub fn integrate_values(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.areas).map(|(v, a)| v * a).sum()
    }

    /// `½ Σ_e w_e |x_j - x_i|²`.
    pub fn dirichlet_sum<T: NodeValue>(&self, x: &[T]) -> f64 {
        0.5 * self
            .edges
            .iter()
            .map(|&(i, j, w)| w * (x[j] - x[i]).mag2())
            .sum::<f64>()
    }

    /// Nodal density `(1 / 2A_i) Σ_j w_ij Re(conj(a_j - a_i)(b_j - b_i))` of `∇a·∇b`.
    ///
    /// Its quadrature is exactly the edge-sum bilinear form, so
    /// `∫ grad_dot(f, f) = 2 · dirichlet_sum(f)`.
    pub fn grad_dot_values<T: NodeValue>(&self, a: &[T], b: &[T]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let s: f64 = self
                    .neighbours(i)
                    .map(|(j, w)| w * (a[j] - a[i]).re_dot(b[j] - b[i]))
                    .sum();
                s / (2.0 * self.areas[i])
            })
            .collect()
    }
}

struct RawGrid {
    coords: Vec<[f64; 2]>,
    on_boundary: Vec<bool>,
    boundary: Vec<usize>,
    boundary_arclength: Vec<f64>,
    areas: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    spacing: f64,
}

impl RawGrid {
    fn square(n: usize) -> Self {
        let m = n + 2;
        let h = 1.0 / (n + 1) as f64;
        let idx = |i: usize, j: usize| j * m + i;
        let half = |i: usize| if i == 0 || i == m - 1 { 0.5 } else { 1.0 };

        let mut coords = Vec::with_capacity(m * m);
        let mut on_boundary = Vec::with_capacity(m * m);
        let mut areas = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                coords.push([i as f64 * h, j as f64 * h]);
                on_boundary.push(i == 0 || j == 0 || i == m - 1 || j == m - 1);
                areas.push(half(i) * half(j) * h * h);
            }
        }

        let mut edges = Vec::with_capacity(2 * m * (m - 1));
        for j in 0..m {
            for i in 0..m {
                if i + 1 < m {
                    edges.push((idx(i, j), idx(i + 1, j), half(j)));
                }
                if j + 1 < m {
                    edges.push((idx(i, j), idx(i, j + 1), half(i)));
                }
            }
        }

        let mut boundary = Vec::with_capacity(4 * m - 4);
        boundary.extend((0..m).map(|i| idx(i, 0)));
        boundary.extend((1..m).map(|j| idx(m - 1, j)));
        boundary.extend((0..m - 1).rev().map(|i| idx(i, m - 1)));
        boundary.extend((1..m - 1).rev().map(|j| idx(0, j)));
        let count = boundary.len() as f64;
        let boundary_arclength = (0..boundary.len()).map(|k| k as f64 / count).collect();

        RawGrid {
            coords,
            on_boundary,
            boundary,
            boundary_arclength,
            areas,
            edges,
            spacing: h,
        }
    }

    fn disk(n: usize) -> Self {
        let m = ANGULAR_FACTOR * n;
        let hr = 1.0 / n as f64;
        let dtheta = 2.0 * PI / m as f64;
        let node = |j: usize, k: usize| 1 + (j - 1) * m + k;
        let total = 1 + n * m;

        let mut coords = Vec::with_capacity(total);
        let mut on_boundary = Vec::with_capacity(total);
        let mut areas = Vec::with_capacity(total);
        coords.push([0.0, 0.0]);
        on_boundary.push(false);
        areas.push(PI * 0.25 * hr * hr);
        for j in 1..=n {
            let r = j as f64 * hr;
            let area = if j < n {
                r * hr * dtheta
            } else {
                let inner = 1.0 - 0.5 * hr;
                0.5 * dtheta * (1.0 - inner * inner)
            };
            for k in 0..m {
                let theta = k as f64 * dtheta;
                coords.push([r * theta.cos(), r * theta.sin()]);
                on_boundary.push(j == n);
                areas.push(area);
            }
        }

        let mut edges = Vec::with_capacity(2 * total);
        for k in 0..m {
            edges.push((0, node(1, k), 0.5 * dtheta));
        }
        for j in 1..=n {
            let r = j as f64 * hr;
            let angular = if j < n { hr / (r * dtheta) } else { 0.5 * hr / dtheta };
            for k in 0..m {
                let next = (k + 1) % m;
                let (a, b) = (node(j, k), node(j, next));
                edges.push((a.min(b), a.max(b), angular));
                if j < n {
                    let r_face = r + 0.5 * hr;
                    edges.push((node(j, k), node(j + 1, k), r_face * dtheta / hr));
                }
            }
        }

        let boundary: Vec<usize> = (0..m).map(|k| node(n, k)).collect();
        let boundary_arclength = (0..m).map(|k| k as f64 / m as f64).collect();

        RawGrid {
            coords,
            on_boundary,
            boundary,
            boundary_arclength,
            areas,
            edges,
            spacing: hr.max(dtheta),
        }
    }

    fn finish(self, kind: DomainKind, resolution: usize) -> Grid {
        let len = self.coords.len();
        let interior: Vec<usize> = (0..len).filter(|&i| !self.on_boundary[i]).collect();

        let mut degree = vec![0usize; len];
        for &(i, j, _) in &self.edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut adj_start = vec![0usize; len + 1];
        for i in 0..len {
            adj_start[i + 1] = adj_start[i] + degree[i];
        }
        let mut fill = adj_start.clone();
        let mut adj_node = vec![0usize; adj_start[len]];
        let mut adj_weight = vec![0.0; adj_start[len]];
        for &(i, j, w) in &self.edges {
            adj_node[fill[i]] = j;
            adj_weight[fill[i]] = w;
            fill[i] += 1;
            adj_node[fill[j]] = i;
            adj_weight[fill[j]] = w;
            fill[j] += 1;
        }
        let weight_sum = (0..len)
            .map(|i| adj_weight[adj_start[i]..adj_start[i + 1]].iter().sum())
            .collect();

        Grid {
            kind,
            resolution,
            coords: self.coords,
            on_boundary: self.on_boundary,
            interior,
            boundary: self.boundary,
            boundary_arclength: self.boundary_arclength,
            areas: self.areas,
            edges: self.edges,
            adj_start,
            adj_node,
            adj_weight,
            weight_sum,
            spacing: self.spacing,
        }
    }
}

/// Values on every node of a grid.
#[derive(Clone, Debug)]
pub struct Field<T> {
    grid: Arc<Grid>,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: NodeValue> Field<T> {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![T::default(); grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<T>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Field {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(f64, f64) -> T) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: grid.coords().iter().map(|&[x, y]| f(x, y)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: NodeValue>(&self, mut f: impl FnMut(T) -> U) -> Field<U> {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn check_same_grid<U>(&self, other: &Field<U>) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Discrete Laplacian; boundary rows of the result are zero.
pub fn laplacian<T: NodeValue>(field: &Field<T>) -> Field<T> {
    let mut out = vec![T::default(); field.values.len()];
    field.grid.laplacian_into(&field.values, &mut out);
    Field {
        grid: Arc::clone(&field.grid),
        values: out,
    }
}

/// Area-weighted quadrature `Σ f_i A_i`.
pub fn integrate(field: &ScalarField) -> f64 {
    field.grid.integrate_values(&field.values)
}

/// `½ ∫ |∇u|²`.
pub fn dirichlet_energy<T: NodeValue>(field: &Field<T>) -> f64 {
    field.grid.dirichlet_sum(&field.values)
}

/// Nodal density of `∇a · ∇b`.
pub fn grad_dot<T: NodeValue>(a: &Field<T>, b: &Field<T>) -> Result<ScalarField> {
    a.check_same_grid(b)?;
    Ok(Field {
        grid: Arc::clone(&a.grid),
        values: a.grid.grad_dot_values(&a.values, &b.values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts() {
        let g = build_grid(DomainKind::UnitSquare, 8).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g.interior().len(), 64);
        assert_eq!(g.boundary().len(), 36, "10x10 lattice: 100 - 64 perimeter nodes");
    }

    #[test]
    fn rejects_coarse_resolution() {
        assert!(matches!(build_grid(DomainKind::UnitDisk, 7), Err(Error::Config(_))));
    }

    #[test]
    fn partition_and_single_traversal() {
        for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
            let g = build_grid(kind, 12).unwrap();
            let mut seen = vec![0u8; g.len()];
            for &i in g.interior() {
                seen[i] += 1;
                assert!(!g.is_boundary(i));
            }
            for &b in g.boundary() {
                seen[b] += 1;
                assert!(g.is_boundary(b));
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn boundary_is_counterclockwise() {
        for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
            let g = build_grid(kind, 10).unwrap();
            let b = g.boundary();
            // shoelace area of the boundary polygon is positive for CCW order
            let signed: f64 = (0..b.len())
                .map(|k| {
                    let [x0, y0] = g.coords()[b[k]];
                    let [x1, y1] = g.coords()[b[(k + 1) % b.len()]];
                    x0 * y1 - x1 * y0
                })
                .sum::<f64>()
                * 0.5;
            assert!(signed > 0.0, "{kind:?}");
            // total angular increment is one full turn
            let angles = g.boundary_angles();
            let turn: f64 = (0..angles.len())
                .map(|k| {
                    let d = angles[(k + 1) % angles.len()] - angles[k];
                    (d + PI).rem_euclid(2.0 * PI) - PI
                })
                .sum();
            assert!((turn - 2.0 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_areas_sum_to_domain_area() {
        for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
            for n in [8, 16, 33] {
                let g = build_grid(kind, n).unwrap();
                let total: f64 = g.areas().iter().sum();
                assert!((total - kind.area()).abs() <= 0.01 * kind.area());
                assert!(g.areas().iter().all(|&a| a > 0.0));
            }
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
            let g = build_grid(kind, 16).unwrap();
            let f = ScalarField::from_fn(&g, |_, _| 3.25);
            let lap = laplacian(&f);
            assert!(lap.values().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn laplacian_of_r_squared_is_four() {
        let g = build_grid(DomainKind::UnitSquare, 64).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x * x + y * y);
        let lap = laplacian(&f);
        let h = g.spacing();
        for &i in g.interior() {
            assert!((lap.values()[i] - 4.0).abs() <= 10.0 * h * h);
        }
    }

    #[test]
    fn harmonic_polynomials() {
        let g = build_grid(DomainKind::UnitSquare, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x * x - y * y);
        let lap = laplacian(&f);
        let h = g.spacing();
        assert!(g.interior().iter().all(|&i| lap.values()[i].abs() <= 10.0 * h * h));

        let g = build_grid(DomainKind::UnitDisk, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x, _| x);
        let lap = laplacian(&f);
        let h = g.spacing();
        for &i in g.interior() {
            let [x, y] = g.coords()[i];
            let r = x.hypot(y);
            if r > 0.25 {
                assert!(lap.values()[i].abs() <= 10.0 * h * h, "r = {r}");
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        let disk = build_grid(DomainKind::UnitDisk, 16).unwrap();
        let one = ScalarField::from_fn(&disk, |_, _| 1.0);
        assert!((integrate(&one) - PI).abs() <= 0.01 * PI);

        let sq = build_grid(DomainKind::UnitSquare, 16).unwrap();
        let one = ScalarField::from_fn(&sq, |_, _| 1.0);
        assert!((integrate(&one) - 1.0).abs() <= 0.01);
        let x = ScalarField::from_fn(&sq, |x, _| x);
        assert!((integrate(&x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_energy_examples() {
        let sq = build_grid(DomainKind::UnitSquare, 20).unwrap();
        let one = ComplexField::from_fn(&sq, |_, _| Complex64::new(1.0, 0.0));
        assert_eq!(dirichlet_energy(&one), 0.0);
        let z = ComplexField::from_fn(&sq, Complex64::new);
        assert!((dirichlet_energy(&z) - 1.0).abs() < 1e-12);

        let disk = build_grid(DomainKind::UnitDisk, 32).unwrap();
        let delta = 0.5;
        let u = ComplexField::from_fn(&disk, |x, _| Complex64::from_polar(1.0, delta * x));
        let expected = 0.5 * delta * delta * PI;
        assert!((dirichlet_energy(&u) - expected).abs() <= 0.02 * expected);
    }

    #[test]
    fn shape_errors() {
        let g = build_grid(DomainKind::UnitSquare, 8).unwrap();
        assert!(matches!(
            ScalarField::from_values(&g, vec![0.0; 3]),
            Err(Error::Shape { .. })
        ));
        let other = build_grid(DomainKind::UnitDisk, 8).unwrap();
        let a = ScalarField::zeros(&g);
        let b = ScalarField::zeros(&other);
        assert!(matches!(grad_dot(&a, &b), Err(Error::GridMismatch)));
    }
}
