//! Closed discrete hypersurfaces in R^{n+1} for n = 1 (polygons) and
//! n = 2 (triangle meshes), with the per-vertex geometry every other module
//! consumes.
//!
//! Conventions:
//!
//! - `ν` is the outward unit normal, so convex surfaces have `H > 0` and the
//!   flow `∂F/∂t = −Hν` shrinks them.
//! - The mean curvature vector is `Hν = ∇μ / w`, the gradient of total
//!   length/area with respect to the vertex, divided by the dual weight.
//!   The scalar `H` is its projection on `ν`.
//! - Dual weights are barycentric: half of the incident edge lengths for
//!   curves, a third of the incident triangle areas for meshes.
//! - On meshes `|A|² = max(H² − 2K, 0)` with `K` the angle defect divided
//!   by the dual weight. On curves `|A|² = H²`.

mod generate;
mod io;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

pub use generate::{
    bumpy_curve, bumpy_sphere, ellipse, ellipsoid, icosphere, regular_polygon, SphericalBump,
};
pub use io::{
    curve_json_string, obj_string, parse_curve_json, parse_obj, read_curve_json, read_obj, read_scalar_csv, read_surface, write_curve_json, write_obj,
    write_scalar_csv, write_surface,
};

pub type Point = Vector3<f64>;

/// Relative degeneracy threshold: a dual weight below
/// `DEGENERACY_FACTOR * measure / vertex_count` is rejected.
pub const DEGENERACY_FACTOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    /// Closed polygon in the plane, n = 1.
    Curve,
    /// Closed triangle mesh in space, n = 2.
    Surface,
}

impl Dimension {
    pub fn n(self) -> usize {
        match self {
            Dimension::Curve => 1,
            Dimension::Surface => 2,
        }
    }

    pub fn from_n(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Dimension::Curve),
            2 => Ok(Dimension::Surface),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Connectivity {
    /// Vertices `0..len` visited in order, the last joined back to the first.
    Loop { len: usize },
    /// Oriented triangles, counter-clockwise seen from outside.
    Triangles(Vec<[usize; 3]>),
}

impl Connectivity {
    pub fn triangles(&self) -> Option<&[[usize; 3]]> {
        match self {
            Connectivity::Triangles(t) => Some(t),
            Connectivity::Loop { .. } => None,
        }
    }

    /// Undirected edges, each listed once with the smaller index first.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        match self {
            Connectivity::Loop { len } => (0..*len)
                .map(|i| {
                    let j = (i + 1) % len;
                    [i.min(j), i.max(j)]
                })
                .collect(),
            Connectivity::Triangles(faces) => {
                let mut edges: Vec<[usize; 2]> = faces
                    .iter()
                    .flat_map(|f| {
                        (0..3).map(move |k| {
                            let (a, b) = (f[k], f[(k + 1) % 3]);
                            [a.min(b), a.max(b)]
                        })
                    })
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                edges
            }
        }
    }

    /// Vertex adjacency lists.
    pub fn neighbors(&self, vertex_count: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); vertex_count];
        for [a, b] in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// A closed, oriented, embedded discrete hypersurface with refreshed
/// per-vertex geometry. Immutable once built.
#[derive(Clone, Debug)]
pub struct DiscreteHypersurface {
    dim: Dimension,
    positions: Vec<Point>,
    connectivity: Arc<Connectivity>,
    normals: Vec<Point>,
    curvature_vectors: Vec<Point>,
    mean_curvature: Vec<f64>,
    a_squared: Vec<f64>,
    gaussian: Vec<f64>,
    weights: Vec<f64>,
    measure: f64,
}

/// Per-vertex scalar data attached to a surface.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "field value at vertex {i} is not finite"
            )));
        }
        Ok(ScalarField(values))
    }

    pub fn constant(value: f64, len: usize) -> Self {
        ScalarField(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        ScalarField::new(self.0.iter().map(|&v| f(v)).collect())
    }
}

impl From<ScalarField> for Vec<f64> {
    fn from(f: ScalarField) -> Self {
        f.0
    }
}

/// Gradient data of a field: one entry per edge (curves) or face (meshes).
#[derive(Clone, Debug)]
pub struct ElementGradients {
    /// Length or area of each element.
    pub measure: Vec<f64>,
    /// Gradient magnitude, constant on each element.
    pub magnitude: Vec<f64>,
}

impl ElementGradients {
    /// `∫ |∇f| dμ`
    pub fn l1(&self) -> f64 {
        self.measure
            .iter()
            .zip(&self.magnitude)
            .map(|(m, g)| m * g)
            .sum()
    }

    /// `∫ |∇f|² dμ`
    pub fn dirichlet(&self) -> f64 {
        self.measure
            .iter()
            .zip(&self.magnitude)
            .map(|(m, g)| m * g * g)
            .sum()
    }
}

/// Builds a surface, validating connectivity and orienting it outward.
pub fn build_surface(
    positions: Vec<Point>,
    connectivity: Connectivity,
) -> Result<DiscreteHypersurface> {
    if let Some(i) = positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "vertex {i} has a non-finite coordinate"
        )));
    }
    match connectivity {
        Connectivity::Loop { len } => build_curve(positions, len),
        Connectivity::Triangles(faces) => build_mesh(positions, faces),
    }
}

fn build_curve(mut positions: Vec<Point>, len: usize) -> Result<DiscreteHypersurface> {
    if len != positions.len() {
        return Err(Error::NonManifold(format!(
            "loop of length {len} over {} vertices",
            positions.len()
        )));
    }
    if len < 3 {
        return Err(Error::NonManifold(format!(
            "a closed polygon needs at least 3 vertices, got {len}"
        )));
    }
    if positions.iter().any(|p| p.z != 0.0) {
        return Err(Error::InvalidInput(
            "curve vertices must lie in the plane z = 0".into(),
        ));
    }
    if signed_area(&positions) < 0.0 {
        positions.reverse();
    }
    DiscreteHypersurface::assemble(Dimension::Curve, positions, Arc::new(Connectivity::Loop { len }))
}

fn build_mesh(positions: Vec<Point>, mut faces: Vec<[usize; 3]>) -> Result<DiscreteHypersurface> {
    validate_mesh(positions.len(), &faces)?;
    if signed_volume(&positions, &faces) < 0.0 {
        for f in &mut faces {
            f.swap(1, 2);
        }
    }
    DiscreteHypersurface::assemble(
        Dimension::Surface,
        positions,
        Arc::new(Connectivity::Triangles(faces)),
    )
}

fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
}

fn signed_volume(positions: &[Point], faces: &[[usize; 3]]) -> f64 {
    faces
        .iter()
        .map(|f| positions[f[0]].dot(&positions[f[1]].cross(&positions[f[2]])) / 6.0)
        .sum()
}

fn validate_mesh(vertex_count: usize, faces: &[[usize; 3]]) -> Result<()> {
    if faces.is_empty() {
        return Err(Error::NonManifold("no faces".into()));
    }
    for (fi, f) in faces.iter().enumerate() {
        if f.iter().any(|&v| v >= vertex_count) {
            return Err(Error::InvalidInput(format!(
                "face {fi} references a vertex out of range"
            )));
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::Degenerate(format!("face {fi} repeats a vertex")));
        }
    }

    // Undirected edge -> number of incident faces, and the directed half-edges.
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let e = (f[k], f[(k + 1) % 3]);
            if directed.insert(e, fi).is_some() {
                return Err(Error::NonManifold(format!(
                    "directed edge {e:?} used twice (non-manifold edge or inconsistent orientation)"
                )));
            }
        }
    }
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            return Err(Error::NonManifold(format!("boundary edge ({a}, {b})")));
        }
    }

    // Each vertex star must be a single disk: the link edges form one cycle.
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertex_count];
    for f in faces {
        for k in 0..3 {
            link[f[k]].push((f[(k + 1) % 3], f[(k + 2) % 3]));
        }
    }
    for (v, edges) in link.iter().enumerate() {
        if edges.is_empty() {
            return Err(Error::NonManifold(format!("vertex {v} is not used by any face")));
        }
        let next: HashMap<usize, usize> = edges.iter().copied().collect();
        let start = edges[0].0;
        let mut cur = start;
        let mut steps = 0;
        loop {
            cur = next[&cur];
            steps += 1;
            if cur == start || steps > edges.len() {
                break;
            }
        }
        if cur != start || steps != edges.len() {
            return Err(Error::NonManifold(format!(
                "vertex {v} is a non-manifold (pinched) vertex"
            )));
        }
    }

    // Single connected component.
    let mut parent: Vec<usize> = (0..vertex_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for f in faces {
        for k in 1..3 {
            let (a, b) = (find(&mut parent, f[0]), find(&mut parent, f[k]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let root = find(&mut parent, 0);
    if (0..vertex_count).any(|v| find(&mut parent, v) != root) {
        return Err(Error::NonManifold("more than one connected component".into()));
    }

    let edges = directed.len() / 2;
    let chi = vertex_count as i64 - edges as i64 + faces.len() as i64;
    if chi > 2 || chi % 2 != 0 {
        return Err(Error::NonManifold(format!(
            "Euler characteristic {chi} is not that of a closed orientable surface"
        )));
    }
    Ok(())
}

impl DiscreteHypersurface {
    fn assemble(
        dim: Dimension,
        positions: Vec<Point>,
        connectivity: Arc<Connectivity>,
    ) -> Result<Self> {
        let mut s = DiscreteHypersurface {
            dim,
            normals: Vec::new(),
            curvature_vectors: Vec::new(),
            mean_curvature: Vec::new(),
            a_squared: Vec::new(),
            gaussian: Vec::new(),
            weights: Vec::new(),
            measure: 0.0,
            positions,
            connectivity,
        };
        s.refresh()?;
        Ok(s)
    }

    /// Same connectivity, new vertex positions; caches recomputed.
    ///
    /// Orientation is inherited rather than re-derived, so an evolving
    /// surface keeps its vertex order.
    pub fn with_positions(&self, positions: Vec<Point>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} positions, got {}",
                self.positions.len(),
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Degenerate(format!("vertex {i} became non-finite")));
        }
        Self::assemble(self.dim, positions, Arc::clone(&self.connectivity))
    }

    /// Applies `f` to every vertex position (rigid motions, dilations).
    ///
    /// Orientation-reversing maps are re-oriented outward: mesh faces are
    /// flipped in place, polygon vertex order is reversed.
    pub fn map_positions(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        let mut positions: Vec<Point> = self.positions.iter().map(f).collect();
        let flipped = match &*self.connectivity {
            Connectivity::Loop { .. } => signed_area(&positions) < 0.0,
            Connectivity::Triangles(faces) => signed_volume(&positions, faces) < 0.0,
        };
        if !flipped {
            return self.with_positions(positions);
        }
        match &*self.connectivity {
            Connectivity::Loop { len } => {
                positions.reverse();
                Self::assemble(self.dim, positions, Arc::new(Connectivity::Loop { len: *len }))
            }
            Connectivity::Triangles(faces) => {
                let faces = faces.iter().map(|f| [f[0], f[2], f[1]]).collect();
                Self::assemble(self.dim, positions, Arc::new(Connectivity::Triangles(faces)))
            }
        }
    }

    /// Recomputes normals, curvatures and dual weights from positions.
    fn refresh(&mut self) -> Result<()> {
        match self.dim {
            Dimension::Curve => self.refresh_curve(),
            Dimension::Surface => self.refresh_mesh(),
        }?;
        self.measure = self.weights.iter().sum();
        let eps = DEGENERACY_FACTOR * self.measure / self.positions.len() as f64;
        if let Some(i) = self.weights.iter().position(|&w| !(w > eps)) {
            return Err(Error::Degenerate(format!(
                "dual weight at vertex {i} underflows ({:e} <= {eps:e})",
                self.weights[i]
            )));
        }
        Ok(())
    }

    fn refresh_curve(&mut self) -> Result<()> {
        let n = self.positions.len();
        let mut tangents = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        for i in 0..n {
            let e = self.positions[(i + 1) % n] - self.positions[i];
            let l = e.norm();
            if !(l > 0.0) {
                return Err(Error::Degenerate(format!("edge {i} has zero length")));
            }
            tangents.push(e / l);
            lengths.push(l);
        }
        self.weights = Vec::with_capacity(n);
        self.normals = Vec::with_capacity(n);
        self.curvature_vectors = Vec::with_capacity(n);
        self.mean_curvature = Vec::with_capacity(n);
        self.a_squared = Vec::with_capacity(n);
        self.gaussian = Vec::new();
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let w = 0.5 * (lengths[prev] + lengths[i]);
            // Counter-clockwise orientation: outward edge normal is (t.y, -t.x).
            let outward = |t: &Point| Point::new(t.y, -t.x, 0.0);
            let nu = (outward(&tangents[prev]) + outward(&tangents[i]))
                .try_normalize(0.0)
                .ok_or_else(|| Error::Degenerate(format!("cusp at vertex {i}")))?;
            let hvec = (tangents[prev] - tangents[i]) / w;
            let h = hvec.dot(&nu);
            self.weights.push(w);
            self.normals.push(nu);
            self.curvature_vectors.push(hvec);
            self.mean_curvature.push(h);
            self.a_squared.push(h * h);
        }
        Ok(())
    }

    fn refresh_mesh(&mut self) -> Result<()> {
        let nv = self.positions.len();
        let faces = self.connectivity.triangles().expect("mesh connectivity");
        let mut area_grad = vec![Point::zeros(); nv];
        let mut normal_sum = vec![Point::zeros(); nv];
        let mut angle_sum = vec![0.0; nv];
        let mut weights = vec![0.0; nv];
        let total: f64 = faces
            .iter()
            .map(|f| self.face_normal_raw(f).norm() * 0.5)
            .sum();
        let face_eps = DEGENERACY_FACTOR * total / faces.len() as f64;
        for (fi, f) in faces.iter().enumerate() {
            let cross = self.face_normal_raw(f);
            let area = 0.5 * cross.norm();
            if !(area > face_eps) {
                return Err(Error::Degenerate(format!("face {fi} has zero area")));
            }
            let p = [self.positions[f[0]], self.positions[f[1]], self.positions[f[2]]];
            for k in 0..3 {
                let (i, j, l) = (k, (k + 1) % 3, (k + 2) % 3);
                let a = p[j] - p[i];
                let b = p[l] - p[i];
                if a.norm() == 0.0 {
                    return Err(Error::Degenerate(format!("face {fi} has a zero-length edge")));
                }
                angle_sum[f[i]] += a.angle(&b);
                // cot of the angle at corner i weighs the opposite edge (j, l).
                let cot = a.dot(&b) / a.cross(&b).norm();
                let g = 0.5 * cot * (p[j] - p[l]);
                area_grad[f[j]] += g;
                area_grad[f[l]] -= g;
                normal_sum[f[i]] += cross;
                weights[f[i]] += area / 3.0;
            }
        }
        self.normals = Vec::with_capacity(nv);
        self.curvature_vectors = Vec::with_capacity(nv);
        self.mean_curvature = Vec::with_capacity(nv);
        self.a_squared = Vec::with_capacity(nv);
        self.gaussian = Vec::with_capacity(nv);
        for v in 0..nv {
            let nu = normal_sum[v]
                .try_normalize(0.0)
                .ok_or_else(|| Error::Degenerate(format!("vertex {v} has no normal")))?;
            let w = weights[v];
            let hvec = area_grad[v] / w;
            let h = hvec.dot(&nu);
            let k = (2.0 * PI - angle_sum[v]) / w;
            self.normals.push(nu);
            self.curvature_vectors.push(hvec);
            self.mean_curvature.push(h);
            self.gaussian.push(k);
            self.a_squared.push((h * h - 2.0 * k).max(0.0));
        }
        self.weights = weights;
        Ok(())
    }

    fn face_normal_raw(&self, f: &[usize; 3]) -> Point {
        let p0 = self.positions[f[0]];
        (self.positions[f[1]] - p0).cross(&(self.positions[f[2]] - p0))
    }

    pub fn dimension(&self) -> Dimension {
        self.dim
    }

    /// Hypersurface dimension `n`.
    pub fn n(&self) -> usize {
        self.dim.n()
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn connectivity(&self) -> &Connectivity {
        &self.connectivity
    }

    pub fn shared_connectivity(&self) -> Arc<Connectivity> {
        Arc::clone(&self.connectivity)
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    /// Discrete mean curvature vectors `Hν`.
    pub fn curvature_vectors(&self) -> &[Point] {
        &self.curvature_vectors
    }

    pub fn mean_curvature(&self) -> &[f64] {
        &self.mean_curvature
    }

    pub fn a_squared(&self) -> &[f64] {
        &self.a_squared
    }

    /// Gaussian curvature, meshes only.
    pub fn gaussian_curvature(&self) -> Option<&[f64]> {
        match self.dim {
            Dimension::Surface => Some(&self.gaussian),
            Dimension::Curve => None,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total length (n = 1) or area (n = 2).
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn abs_a(&self) -> Vec<f64> {
        self.a_squared.iter().map(|a| a.sqrt()).collect()
    }

    pub fn max_abs_a(&self) -> f64 {
        self.a_squared.iter().fold(0.0f64, |m, &a| m.max(a)).sqrt()
    }

    pub fn euler_characteristic(&self) -> i64 {
        match &*self.connectivity {
            Connectivity::Loop { .. } => 0,
            Connectivity::Triangles(faces) => {
                let e = self.connectivity.edges().len();
                self.vertex_count() as i64 - e as i64 + faces.len() as i64
            }
        }
    }

    pub fn centroid(&self) -> Point {
        self.positions.iter().sum::<Point>() / self.vertex_count() as f64
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.connectivity
            .edges()
            .iter()
            .map(|[a, b]| (self.positions[*a] - self.positions[*b]).norm())
            .collect()
    }

    /// Enclosed area (n = 1) or volume (n = 2).
    pub fn enclosed_volume(&self) -> f64 {
        match &*self.connectivity {
            Connectivity::Loop { .. } => signed_area(&self.positions),
            Connectivity::Triangles(faces) => signed_volume(&self.positions, faces),
        }
    }

    fn check_field(&self, field: &ScalarField) -> Result<()> {
        if field.len() != self.vertex_count() {
            return Err(Error::FieldMismatch {
                expected: self.vertex_count(),
                got: field.len(),
            });
        }
        Ok(())
    }

    /// `∫_M |f|^p dμ = Σ |f_i|^p w_i`.
    pub fn integrate(&self, field: &ScalarField, p: f64) -> Result<f64> {
        self.check_field(field)?;
        if !(p > 0.0) {
            return Err(Error::InvalidInput(format!("exponent p = {p} must be positive")));
        }
        Ok(integrate_weighted(field.values(), &self.weights, p))
    }

    /// `(∫_M |f|^p dμ)^{1/p}`
    pub fn lp_norm(&self, field: &ScalarField, p: f64) -> Result<f64> {
        Ok(self.integrate(field, p)?.powf(1.0 / p))
    }

    /// Piecewise-linear gradient magnitudes per face, or difference
    /// quotients per edge for curves.
    pub fn element_gradients(&self, field: &ScalarField) -> Result<ElementGradients> {
        self.check_field(field)?;
        let f = field.values();
        let mut measure = Vec::new();
        let mut magnitude = Vec::new();
        match &*self.connectivity {
            Connectivity::Loop { len } => {
                for i in 0..*len {
                    let j = (i + 1) % len;
                    let l = (self.positions[j] - self.positions[i]).norm();
                    measure.push(l);
                    magnitude.push((f[j] - f[i]).abs() / l);
                }
            }
            Connectivity::Triangles(faces) => {
                for face in faces {
                    let cross = self.face_normal_raw(face);
                    let twice_area = cross.norm();
                    let unit = cross / twice_area;
                    // ∇φ_k = ν_f × (edge opposite k, oriented) / 2A; writing the
                    // gradient in differences keeps constants exactly gradient-free.
                    let basis = |k: usize| {
                        let e = self.positions[face[(k + 2) % 3]] - self.positions[face[(k + 1) % 3]];
                        unit.cross(&e) / twice_area
                    };
                    let f0 = f[face[0]];
                    let grad = (f[face[1]] - f0) * basis(1) + (f[face[2]] - f0) * basis(2);
                    measure.push(0.5 * twice_area);
                    magnitude.push(grad.norm());
                }
            }
        }
        Ok(ElementGradients { measure, magnitude })
    }

    /// `∫_M |∇f|² dμ`
    pub fn dirichlet_energy(&self, field: &ScalarField) -> Result<f64> {
        Ok(self.element_gradients(field)?.dirichlet())
    }

    /// Symmetric positive semidefinite stiffness matrix `C` with
    /// `C X = ∇μ`: cotangent weights on meshes, inverse edge lengths on
    /// curves. The discrete Laplace–Beltrami operator is `−W⁻¹C`.
    pub fn stiffness_matrix(&self) -> CsrMatrix {
        let nv = self.vertex_count();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let push_edge = |i: usize, j: usize, w: f64, t: &mut Vec<(usize, usize, f64)>| {
            t.push((i, i, w));
            t.push((j, j, w));
            t.push((i, j, -w));
            t.push((j, i, -w));
        };
        match &*self.connectivity {
            Connectivity::Loop { len } => {
                for i in 0..*len {
                    let j = (i + 1) % len;
                    let l = (self.positions[j] - self.positions[i]).norm();
                    push_edge(i, j, 1.0 / l, &mut triplets);
                }
            }
            Connectivity::Triangles(faces) => {
                for f in faces {
                    for k in 0..3 {
                        let (i, j, l) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                        let a = self.positions[j] - self.positions[i];
                        let b = self.positions[l] - self.positions[i];
                        let cot = a.dot(&b) / a.cross(&b).norm();
                        push_edge(j, l, 0.5 * cot, &mut triplets);
                    }
                }
            }
        }
        CsrMatrix::from_triplets(nv, &triplets)
    }
}

pub(crate) fn integrate_weighted(values: &[f64], weights: &[f64], p: f64) -> f64 {
    values
        .iter()
        .zip(weights)
        .map(|(v, w)| v.abs().powf(p) * w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    }

    #[test]
    fn regular_polygon_perimeter() {
        let k = 1000;
        let c = regular_polygon(k, 1.0).unwrap();
        let exact = 2.0 * k as f64 * (PI / k as f64).sin();
        assert_relative_eq!(c.measure(), exact, max_relative = 1e-12);
        assert!((c.measure() / (2.0 * PI) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn circle_curvature() {
        let c = regular_polygon(10_000, 1.0).unwrap();
        for (&h, &a2) in c.mean_curvature().iter().zip(c.a_squared()) {
            assert!((h - 1.0).abs() <= 1e-4);
            assert!((a2 - 1.0).abs() <= 1e-4);
        }
    }

    #[test]
    fn icosphere_area_and_curvature() {
        let s = icosphere(4, 1.0).unwrap();
        assert_eq!(s.vertex_count(), 2562);
        // Inscribed mesh: area deficit of the level-4 icosphere is 0.12%.
        let deficit = 1.0 - s.measure() / (4.0 * PI);
        assert!(deficit > 0.0 && deficit < 1.5e-3, "{deficit}");
        let h = median(s.mean_curvature().to_vec());
        let k = median(s.gaussian_curvature().unwrap().to_vec());
        let a2 = median(s.a_squared().to_vec());
        assert!((h / 2.0 - 1.0).abs() < 0.01, "H median {h}");
        assert!((k - 1.0).abs() < 0.01, "K median {k}");
        assert!((a2 / 2.0 - 1.0).abs() < 0.01, "|A|^2 median {a2}");
    }

    #[test]
    fn gauss_bonnet_on_ellipsoid() {
        let s = ellipsoid(2.0, 1.0, 1.0, 3).unwrap();
        let total: f64 = s
            .gaussian_curvature()
            .unwrap()
            .iter()
            .zip(s.weights())
            .map(|(k, w)| k * w)
            .sum();
        assert!((total - 4.0 * PI).abs() < 1e-8);
        assert_eq!(s.euler_characteristic(), 2);
    }

    #[test]
    fn a_squared_identity() {
        let s = bumpy_sphere(3, &SphericalBump::random(4, 0.15, 7)).unwrap();
        let k = s.gaussian_curvature().unwrap();
        for i in 0..s.vertex_count() {
            let h = s.mean_curvature()[i];
            assert_eq!(s.a_squared()[i], (h * h - 2.0 * k[i]).max(0.0));
        }
    }

    #[test]
    fn boundary_edge_is_non_manifold() {
        let positions = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        // Tetrahedron with one face missing.
        let faces = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3]];
        let err = build_surface(positions, Connectivity::Triangles(faces)).unwrap_err();
        assert!(matches!(err, Error::NonManifold(_)), "{err}");
    }

    #[test]
    fn zero_area_face_is_degenerate() {
        let positions = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let faces = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        let err = build_surface(positions, Connectivity::Triangles(faces)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }

    #[test]
    fn repeated_point_is_degenerate() {
        let pts = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        let err = build_surface(pts, Connectivity::Loop { len: 4 }).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn orientation_is_outward() {
        let s = icosphere(1, 1.0).unwrap();
        let faces: Vec<[usize; 3]> = s
            .connectivity()
            .triangles()
            .unwrap()
            .iter()
            .map(|f| [f[0], f[2], f[1]])
            .collect();
        let flipped = build_surface(s.positions().to_vec(), Connectivity::Triangles(faces)).unwrap();
        assert!(flipped.enclosed_volume() > 0.0);
        assert!(flipped.mean_curvature().iter().all(|&h| h > 0.0));
        for (p, n) in flipped.positions().iter().zip(flipped.normals()) {
            assert!(p.dot(n) > 0.0);
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }

        let mut pts: Vec<Point> = regular_polygon(12, 1.0).unwrap().positions().to_vec();
        pts.reverse();
        let c = build_surface(pts, Connectivity::Loop { len: 12 }).unwrap();
        assert!(c.mean_curvature().iter().all(|&h| h > 0.0));
    }

    #[test]
    fn integrate_examples() {
        let s = icosphere(4, 1.0).unwrap();
        let one = ScalarField::constant(1.0, s.vertex_count());
        assert_relative_eq!(s.integrate(&one, 1.0).unwrap(), s.measure(), max_relative = 1e-14);
        let zero = ScalarField::constant(0.0, s.vertex_count());
        assert_eq!(s.integrate(&zero, 3.5).unwrap(), 0.0);
        let a = ScalarField::new(s.abs_a()).unwrap();
        let i4 = s.integrate(&a, 4.0).unwrap();
        assert!((i4 / (16.0 * PI) - 1.0).abs() < 0.02, "{i4}");
        let short = ScalarField::constant(1.0, 3);
        assert!(matches!(
            s.integrate(&short, 1.0),
            Err(Error::FieldMismatch { .. })
        ));
    }

    #[test]
    fn dirichlet_examples() {
        let s = icosphere(4, 1.0).unwrap();
        let c = ScalarField::constant(3.0, s.vertex_count());
        assert_eq!(s.dirichlet_energy(&c).unwrap().abs(), 0.0);
        let z = ScalarField::new(s.positions().iter().map(|p| p.z).collect()).unwrap();
        let e = s.dirichlet_energy(&z).unwrap();
        assert!((e / (8.0 * PI / 3.0) - 1.0).abs() < 0.01, "{e}");
        // Degree-one harmonic: ∫|∇f|² = 2 ∫ f².
        let f = ScalarField::new(
            s.positions()
                .iter()
                .map(|p| 0.3 * p.x - 0.5 * p.y + 0.8 * p.z)
                .collect(),
        )
        .unwrap();
        let ratio = s.dirichlet_energy(&f).unwrap() / s.integrate(&f, 2.0).unwrap();
        assert!((ratio / 2.0 - 1.0).abs() < 0.02, "{ratio}");
        // Same energy through the stiffness matrix.
        let cf = s.stiffness_matrix().mul_vec(f.values());
        let quad: f64 = cf.iter().zip(f.values()).map(|(a, b)| a * b).sum();
        assert_relative_eq!(quad, s.dirichlet_energy(&f).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn stiffness_reproduces_area_gradient() {
        let s = bumpy_sphere(2, &SphericalBump::random(3, 0.1, 1)).unwrap();
        let c = s.stiffness_matrix();
        for axis in 0..3 {
            let x: Vec<f64> = s.positions().iter().map(|p| p[axis]).collect();
            let cx = c.mul_vec(&x);
            for v in 0..s.vertex_count() {
                let expect = s.curvature_vectors()[v][axis] * s.weights()[v];
                assert!((cx[v] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn rigid_motion_invariance() {
        let s = bumpy_sphere(3, &SphericalBump::random(3, 0.2, 3)).unwrap();
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let shift = Point::new(1.5, -2.0, 0.25);
        let m = s.map_positions(|p| rot * p + shift).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300);
        for i in 0..s.vertex_count() {
            assert!(close(s.mean_curvature()[i], m.mean_curvature()[i]));
            assert!(close(s.weights()[i], m.weights()[i]));
        }
        let f = ScalarField::new(s.abs_a()).unwrap();
        assert!(close(s.integrate(&f, 4.0).unwrap(), m.integrate(&f, 4.0).unwrap()));
        assert!(close(s.dirichlet_energy(&f).unwrap(), m.dirichlet_energy(&f).unwrap()));
    }

    #[test]
    fn dilation_scaling() {
        for s in [
            bumpy_sphere(3, &SphericalBump::random(3, 0.2, 5)).unwrap(),
            bumpy_curve(300, 0.2, 4, 9).unwrap(),
        ] {
            let n = s.n() as f64;
            let scale = 2.5;
            let d = s.map_positions(|p| p * scale).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
            // Curvatures cross zero on bumpy shapes, so per-vertex tolerances are
            // relative to the largest value on the surface.
            let a2_scale = s.a_squared().iter().fold(0.0f64, |m, &v| m.max(v));
            let h_scale = s.mean_curvature().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            for i in 0..s.vertex_count() {
                let dh = d.mean_curvature()[i] - s.mean_curvature()[i] / scale;
                assert!(dh.abs() <= 1e-12 * h_scale / scale);
                let diff = d.a_squared()[i] - s.a_squared()[i] / (scale * scale);
                assert!(diff.abs() <= 1e-12 * a2_scale / (scale * scale));
            }
            assert!(close(d.measure(), s.measure() * scale.powf(n)));
            let a = ScalarField::new(s.abs_a()).unwrap();
            let ad = ScalarField::new(d.abs_a()).unwrap();
            assert!(close(
                d.integrate(&ad, n + 2.0).unwrap(),
                s.integrate(&a, n + 2.0).unwrap() * scale.powi(-2)
            ));
        }
    }

    #[test]
    fn refinement_reduces_error() {
        let err = |level| {
            let s = icosphere(level, 1.0).unwrap();
            median(s.a_squared().iter().map(|a| (a - 2.0).abs()).collect())
        };
        assert!(err(4) < err(3));
        // Unevenly spaced vertices on the unit circle; regular polygons are exact.
        let cerr = |k: usize| {
            let pts = (0..k)
                .map(|i| {
                    let s = i as f64 / k as f64;
                    let t = 2.0 * PI * s + 0.3 * (2.0 * PI * s).sin();
                    Point::new(t.cos(), t.sin(), 0.0)
                })
                .collect();
            let c = build_surface(pts, Connectivity::Loop { len: k }).unwrap();
            median(c.mean_curvature().iter().map(|h| (h - 1.0).abs()).collect())
        };
        assert!(cerr(200) <= cerr(100));
    }
}
