use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_surface, Connectivity, DiscreteHypersurface, Point};
use crate::error::{Error, Result};

/// Regular `k`-gon inscribed in the circle of the given radius.
pub fn regular_polygon(k: usize, radius: f64) -> Result<DiscreteHypersurface> {
    ellipse(k, radius, radius)
}

/// Polygon with `k` vertices equally spaced in angle on an axis-aligned ellipse.
pub fn ellipse(k: usize, a: f64, b: f64) -> Result<DiscreteHypersurface> {
    let pts = (0..k)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / k as f64;
            Point::new(a * t.cos(), b * t.sin(), 0.0)
        })
        .collect();
    build_surface(pts, Connectivity::Loop { len: k })
}

/// Star-shaped closed curve `r(θ) = 1 + amplitude·g(θ)` where `g` is a
/// random trigonometric polynomial of the given degree with `max |g| = 1`.
pub fn bumpy_curve(k: usize, amplitude: f64, degree: usize, seed: u64) -> Result<DiscreteHypersurface> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (1..=degree)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let g = |t: f64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let m = (m + 1) as f64;
                a * (m * t).cos() + b * (m * t).sin()
            })
            .sum()
    };
    let angles: Vec<f64> = (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect();
    let gmax = angles.iter().map(|&t| g(t).abs()).fold(0.0, f64::max).max(1e-300);
    let pts = angles
        .iter()
        .map(|&t| {
            let r = 1.0 + amplitude * g(t) / gmax;
            Point::new(r * t.cos(), r * t.sin(), 0.0)
        })
        .collect();
    build_surface(pts, Connectivity::Loop { len: k })
}

/// Unit-sphere vertices and faces of a subdivided icosahedron.
pub(crate) fn icosphere_topology(level: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Icosphere with `10·4^level + 2` vertices on the sphere of the given radius.
pub fn icosphere(level: usize, radius: f64) -> Result<DiscreteHypersurface> {
    let (verts, faces) = icosphere_topology(level);
    build_surface(
        verts.into_iter().map(|v| v * radius).collect(),
        Connectivity::Triangles(faces),
    )
}

/// Icosphere stretched to the ellipsoid with semi-axes `(a, b, c)`.
pub fn ellipsoid(a: f64, b: f64, c: f64, level: usize) -> Result<DiscreteHypersurface> {
    let (verts, faces) = icosphere_topology(level);
    build_surface(
        verts
            .into_iter()
            .map(|v| Point::new(a * v.x, b * v.y, c * v.z))
            .collect(),
        Connectivity::Triangles(faces),
    )
}

/// A random polynomial in `(x, y, z)` restricted to the unit sphere, i.e. a
/// combination of spherical harmonics of degree at most `degree`.
#[derive(Clone, Debug)]
pub struct SphericalBump {
    terms: Vec<(f64, [i32; 3])>,
    amplitude: f64,
}

impl SphericalBump {
    pub fn random(degree: usize, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for d in 1..=degree as i32 {
            for i in 0..=d {
                for j in 0..=(d - i) {
                    terms.push((rng.random_range(-1.0..1.0), [i, j, d - i - j]));
                }
            }
        }
        SphericalBump { terms, amplitude }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Raw polynomial value at a unit vector.
    pub fn eval(&self, u: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(c, [i, j, k])| c * u.x.powi(*i) * u.y.powi(*j) * u.z.powi(*k))
            .sum()
    }
}

/// Radial graph `r(u) = 1 + amplitude·g(u)/max|g|` over an icosphere.
pub fn bumpy_sphere(level: usize, bump: &SphericalBump) -> Result<DiscreteHypersurface> {
    if !(bump.amplitude.abs() < 1.0) {
        return Err(Error::InvalidInput(
            "bump amplitude must be below 1 to stay star-shaped".into(),
        ));
    }
    let (verts, faces) = icosphere_topology(level);
    let g: Vec<f64> = verts.iter().map(|u| bump.eval(u)).collect();
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    build_surface(
        verts
            .iter()
            .zip(&g)
            .map(|(u, gv)| u * (1.0 + bump.amplitude * gv / gmax))
            .collect(),
        Connectivity::Triangles(faces),
    )
}
