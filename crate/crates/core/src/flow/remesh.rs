//! Edge split / collapse remeshing with local tangential relaxation.
//!
//! New vertices are lifted off the chord by a parabolic bulge whose
//! curvature is estimated from the endpoint normals, so that splitting an
//! edge of a round surface does not flatten it. No fields are interpolated:
//! the caller rebuilds all geometry from the new positions.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{build_surface, Connectivity, DiscreteHypersurface, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemeshPolicy {
    pub enabled: bool,
    /// Target edge length as a multiple of the smallest radius of curvature
    /// `1 / curvature_scale`. `None` takes the value of the initial surface,
    /// so a self-similar shrinker is never remeshed.
    pub target_fraction: Option<f64>,
    /// Split edges longer than `split_ratio · target`.
    pub split_ratio: f64,
    /// Collapse edges shorter than `collapse_ratio · target`.
    pub collapse_ratio: f64,
    pub relax_iterations: usize,
    pub relax_weight: f64,
}

impl Default for RemeshPolicy {
    fn default() -> Self {
        RemeshPolicy {
            enabled: true,
            target_fraction: None,
            split_ratio: 4.0 / 3.0,
            collapse_ratio: 4.0 / 5.0,
            relax_iterations: 2,
            relax_weight: 0.5,
        }
    }
}

impl RemeshPolicy {
    pub fn disabled() -> Self {
        RemeshPolicy {
            enabled: false,
            ..RemeshPolicy::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.target_fraction {
            if !(f > 0.0) {
                return Err(Error::InvalidInput("remesh target_fraction must be positive".into()));
            }
        }
        if !(self.collapse_ratio > 0.0 && self.collapse_ratio < 1.0 && self.split_ratio > 1.0) {
            return Err(Error::InvalidInput(
                "remesh thresholds need 0 < collapse_ratio < 1 < split_ratio".into(),
            ));
        }
        if !(self.relax_weight >= 0.0 && self.relax_weight <= 1.0) {
            return Err(Error::InvalidInput("relax_weight must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Target fraction for a run starting from `initial`, or `None` when
    /// remeshing is off.
    pub fn target_fraction(&self, initial: &DiscreteHypersurface) -> Option<f64> {
        if !self.enabled {
            return None;
        }
        Some(self.target_fraction.unwrap_or_else(|| {
            let e = initial.edge_lengths();
            e.iter().sum::<f64>() / e.len() as f64 * curvature_scale(initial)
        }))
    }
}

/// Largest one-ring average of `|A|`, the reciprocal of the smallest radius
/// of curvature the mesh resolves.
///
/// Pointwise `|A|` at irregular mesh vertices is biased by O(20%) (the
/// angle defect does not converge pointwise), so the raw maximum would
/// make the target length jump every time remeshing changes a valence.
pub fn curvature_scale(surface: &DiscreteHypersurface) -> f64 {
    let a = surface.abs_a();
    let w = surface.weights();
    let adj = surface.connectivity().neighbors(surface.vertex_count());
    (0..a.len())
        .map(|v| {
            let (num, den) = adj[v]
                .iter()
                .chain(std::iter::once(&v))
                .fold((0.0, 0.0), |(n, d), &u| (n + a[u] * w[u], d + w[u]));
            num / den
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct RemeshOutcome {
    pub surface: DiscreteHypersurface,
    pub splits: usize,
    pub collapses: usize,
}

/// Point at parameter `t` on the edge `a → b`, lifted along the averaged
/// normal by the parabola through both endpoints.
fn lifted(pa: &Point, pb: &Point, na: &Point, nb: &Point, t: f64) -> Point {
    let chord = pb - pa;
    let l2 = chord.norm_squared();
    let kappa = (na - nb).dot(&(pa - pb)) / l2;
    let normal = (na + nb).try_normalize(0.0).unwrap_or(*na);
    pa + t * chord + normal * (0.5 * kappa * l2 * t * (1.0 - t))
}

/// Remeshes if any edge leaves `[collapse_ratio, split_ratio] · target_len`.
pub fn remesh(
    surface: &DiscreteHypersurface,
    target_len: f64,
    policy: &RemeshPolicy,
) -> Result<Option<RemeshOutcome>> {
    if !(target_len > 0.0 && target_len.is_finite()) {
        return Err(Error::InvalidInput(format!("bad remesh target length {target_len}")));
    }
    let hi = policy.split_ratio * target_len;
    let lo = policy.collapse_ratio * target_len;
    if surface.edge_lengths().iter().all(|&l| l >= lo && l <= hi) {
        return Ok(None);
    }
    let outcome = match surface.connectivity() {
        Connectivity::Loop { .. } => remesh_curve(surface, target_len, lo, hi, policy)?,
        Connectivity::Triangles(_) => remesh_mesh(surface, lo, hi, policy)?,
    };
    if outcome.splits == 0 && outcome.collapses == 0 {
        return Ok(None);
    }
    Ok(Some(outcome))
}

fn remesh_curve(
    s: &DiscreteHypersurface,
    target: f64,
    lo: f64,
    hi: f64,
    policy: &RemeshPolicy,
) -> Result<RemeshOutcome> {
    let p = s.positions();
    let nrm = s.normals();
    let n = p.len();
    let mut splits = 0;
    // (position, normal, touched)
    let mut pts: Vec<(Point, Point, bool)> = Vec::with_capacity(n);
    for i in 0..n {
        let j = (i + 1) % n;
        pts.push((p[i], nrm[i], false));
        let l = (p[j] - p[i]).norm();
        if l > hi {
            let k = (l / target).ceil() as usize;
            for m in 1..k {
                let t = m as f64 / k as f64;
                let q = lifted(&p[i], &p[j], &nrm[i], &nrm[j], t);
                pts.push((q, (nrm[i] * (1.0 - t) + nrm[j] * t).normalize(), true));
                splits += 1;
            }
            let last = pts.len() - 1;
            pts[last].2 = true;
        }
    }
    let mut collapses = 0;
    let mut i = 0;
    while i < pts.len() && pts.len() > 3 {
        let j = (i + 1) % pts.len();
        let l = (pts[j].0 - pts[i].0).norm();
        if l < lo && !pts[i].2 && !pts[j].2 {
            let q = lifted(&pts[i].0, &pts[j].0, &pts[i].1, &pts[j].1, 0.5);
            let nq = (pts[i].1 + pts[j].1).normalize();
            pts[i] = (q, nq, true);
            pts.remove(j);
            collapses += 1;
            if j < i {
                i -= 1;
            }
        }
        i += 1;
    }
    let mut positions: Vec<Point> = pts.iter().map(|x| x.0).collect();
    let touched: Vec<bool> = pts.iter().map(|x| x.2).collect();
    let m = positions.len();
    for _ in 0..policy.relax_iterations {
        let prev = positions.clone();
        for v in 0..m {
            let (a, b) = ((v + m - 1) % m, (v + 1) % m);
            if !(touched[v] || touched[a] || touched[b]) {
                continue;
            }
            let tangent = (prev[b] - prev[a]).normalize();
            let mid = (prev[a] + prev[b]) * 0.5;
            positions[v] += policy.relax_weight * (mid - prev[v]).dot(&tangent) * tangent;
        }
    }
    let surface = build_surface(positions, Connectivity::Loop { len: m })?;
    Ok(RemeshOutcome {
        surface,
        splits,
        collapses,
    })
}

type EdgeFaces = HashMap<(usize, usize), Vec<usize>>;

fn edge_faces(faces: &[[usize; 3]]) -> EdgeFaces {
    let mut map: EdgeFaces = HashMap::with_capacity(faces.len() * 2);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            map.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    map
}

fn face_normal(p: &[Point], f: &[usize; 3]) -> Point {
    (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]]))
}

fn remesh_mesh(
    s: &DiscreteHypersurface,
    lo: f64,
    hi: f64,
    policy: &RemeshPolicy,
) -> Result<RemeshOutcome> {
    let mut pos: Vec<Point> = s.positions().to_vec();
    let mut nrm: Vec<Point> = s.normals().to_vec();
    let mut faces: Vec<[usize; 3]> = s.connectivity().triangles().unwrap().to_vec();
    let mut touched: HashSet<usize> = HashSet::new();

    let mut splits = 0;
    for _pass in 0..8 {
        let ef = edge_faces(&faces);
        let mut long: Vec<((usize, usize), f64)> = ef
            .keys()
            .map(|&(a, b)| ((a, b), (pos[a] - pos[b]).norm()))
            .filter(|&(_, l)| l > hi)
            .collect();
        if long.is_empty() {
            break;
        }
        long.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let mut dirty = vec![false; faces.len()];
        for ((a, b), _) in long {
            let adj = &ef[&(a, b)];
            if adj.iter().any(|&f| dirty[f]) {
                continue;
            }
            let m = pos.len();
            pos.push(lifted(&pos[a], &pos[b], &nrm[a], &nrm[b], 0.5));
            nrm.push((nrm[a] + nrm[b]).normalize());
            touched.insert(m);
            for &fi in adj {
                let f = faces[fi];
                // Rotate so the split edge is (f[0], f[1]).
                let k = (0..3)
                    .find(|&k| {
                        let (u, v) = (f[k], f[(k + 1) % 3]);
                        (u == a && v == b) || (u == b && v == a)
                    })
                    .expect("edge belongs to face");
                let (u, v, w) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                faces[fi] = [u, m, w];
                faces.push([m, v, w]);
                dirty[fi] = true;
                dirty.push(true);
                touched.extend([u, v, w]);
            }
            splits += 1;
        }
    }

    let mut collapses = 0;
    let mut removed_face = vec![false; faces.len()];
    let mut removed_vertex = vec![false; pos.len()];
    let mut vf: Vec<Vec<usize>> = vec![Vec::new(); pos.len()];
    for (fi, f) in faces.iter().enumerate() {
        for &v in f {
            vf[v].push(fi);
        }
    }
    let ef = edge_faces(&faces);
    let mut short: Vec<((usize, usize), f64)> = ef
        .keys()
        .map(|&(a, b)| ((a, b), (pos[a] - pos[b]).norm()))
        .filter(|&(_, l)| l < lo)
        .collect();
    short.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    let mut locked = vec![false; pos.len()];
    let live_vertices = |removed: &[bool]| removed.iter().filter(|r| !**r).count();
    for ((a, b), _) in short {
        if locked[a] || locked[b] || live_vertices(&removed_vertex) <= 8 {
            continue;
        }
        let nbrs = |v: usize, vf: &[Vec<usize>], faces: &[[usize; 3]]| -> HashSet<usize> {
            vf[v].iter().flat_map(|&f| faces[f]).filter(|&u| u != v).collect()
        };
        let na = nbrs(a, &vf, &faces);
        let nb = nbrs(b, &vf, &faces);
        let common: Vec<usize> = na.intersection(&nb).copied().collect();
        if common.len() != 2 {
            continue;
        }
        if common.iter().any(|&c| nbrs(c, &vf, &faces).len() <= 3) {
            continue;
        }
        let q = lifted(&pos[a], &pos[b], &nrm[a], &nrm[b], 0.5);
        let mut ok = true;
        let mut kept: Vec<usize> = Vec::new();
        let mut dropped: Vec<usize> = Vec::new();
        for &fi in vf[a].iter().chain(vf[b].iter()) {
            let f = faces[fi];
            if f.contains(&a) && f.contains(&b) {
                if !dropped.contains(&fi) {
                    dropped.push(fi);
                }
                continue;
            }
            let before = face_normal(&pos, &f);
            let moved: Vec<Point> = f
                .iter()
                .map(|&v| if v == a || v == b { q } else { pos[v] })
                .collect();
            let after = (moved[1] - moved[0]).cross(&(moved[2] - moved[0]));
            if after.dot(&before) <= 0.5 * before.norm() * after.norm() {
                ok = false;
                break;
            }
            for &v in &f {
                if v != a && v != b && (pos[v] - q).norm() > hi {
                    ok = false;
                }
            }
            kept.push(fi);
        }
        if !ok || dropped.len() != 2 {
            continue;
        }
        for &fi in &dropped {
            removed_face[fi] = true;
            for &v in &faces[fi] {
                vf[v].retain(|&g| g != fi);
            }
        }
        for &fi in &kept {
            for v in faces[fi].iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
        }
        let moved_faces = std::mem::take(&mut vf[b]);
        for fi in moved_faces {
            if !vf[a].contains(&fi) {
                vf[a].push(fi);
            }
        }
        pos[a] = q;
        nrm[a] = (nrm[a] + nrm[b]).normalize();
        removed_vertex[b] = true;
        locked[a] = true;
        locked[b] = true;
        for v in na.iter().chain(nb.iter()) {
            locked[*v] = true;
            touched.insert(*v);
        }
        touched.insert(a);
        collapses += 1;
    }

    // Compact.
    let mut remap = vec![usize::MAX; pos.len()];
    let mut new_pos = Vec::with_capacity(pos.len());
    for (v, p) in pos.iter().enumerate() {
        if !removed_vertex[v] {
            remap[v] = new_pos.len();
            new_pos.push(*p);
        }
    }
    let new_faces: Vec<[usize; 3]> = faces
        .iter()
        .zip(&removed_face)
        .filter(|(_, r)| !**r)
        .map(|(f, _)| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .collect();
    let touched: Vec<usize> = touched
        .into_iter()
        .filter(|&v| !removed_vertex[v])
        .map(|v| remap[v])
        .collect();
    let mut new_faces = new_faces;
    for _ in 0..20 {
        let nf = flip_pass(&new_pos, &mut new_faces, &touched);
        if nf == 0 {
            break;
        }
    }

    let mut surface = build_surface(new_pos, Connectivity::Triangles(new_faces))?;
    let adj = surface.connectivity().neighbors(surface.vertex_count());
    for _ in 0..policy.relax_iterations {
        let p = surface.positions();
        let n = surface.normals();
        let mut next = p.to_vec();
        for &v in &touched {
            let c = adj[v].iter().map(|&u| p[u]).sum::<Point>() / adj[v].len() as f64;
            let d = c - p[v];
            next[v] += policy.relax_weight * (d - n[v] * d.dot(&n[v]));
        }
        surface = surface.with_positions(next)?;
    }
    Ok(RemeshOutcome {
        surface,
        splits,
        collapses,
    })
}

/// Flips edges next to `touched` vertices when that moves the four
/// affected valences closer to 6 without folding the surface.
fn flip_pass(pos: &[Point], faces: &mut [[usize; 3]], touched: &[usize]) -> usize {
    let mut valence = vec![0i64; pos.len()];
    let ef = edge_faces(faces);
    for &(a, b) in ef.keys() {
        valence[a] += 1;
        valence[b] += 1;
    }
    let mut near = vec![false; pos.len()];
    for &v in touched {
        near[v] = true;
    }
    let mut edges: Vec<(usize, usize)> = ef.keys().copied().filter(|&(a, b)| near[a] || near[b]).collect();
    edges.sort_unstable();
    let mut existing: HashSet<(usize, usize)> = ef.keys().copied().collect();
    let mut dirty = vec![false; faces.len()];
    let mut flips = 0;
    for (a, b) in edges {
        let adj = &ef[&(a, b)];
        if adj.len() != 2 || dirty[adj[0]] || dirty[adj[1]] {
            continue;
        }
        // f1 holds the directed edge a → b, f2 holds b → a.
        let directed = |f: &[usize; 3], u: usize, v: usize| (0..3).any(|k| f[k] == u && f[(k + 1) % 3] == v);
        let (f1, f2) = if directed(&faces[adj[0]], a, b) {
            (adj[0], adj[1])
        } else {
            (adj[1], adj[0])
        };
        let c = *faces[f1].iter().find(|&&v| v != a && v != b).unwrap();
        let d = *faces[f2].iter().find(|&&v| v != a && v != b).unwrap();
        if c == d || existing.contains(&(c.min(d), c.max(d))) {
            continue;
        }
        if valence[a] <= 3 || valence[b] <= 3 {
            continue;
        }
        let dev = |va: i64, vb: i64, vc: i64, vd: i64| {
            [va, vb, vc, vd].iter().map(|v| (v - 6).pow(2)).sum::<i64>()
        };
        let before = dev(valence[a], valence[b], valence[c], valence[d]);
        let after = dev(valence[a] - 1, valence[b] - 1, valence[c] + 1, valence[d] + 1);
        if after >= before {
            continue;
        }
        let n1 = face_normal(pos, &faces[f1]);
        let n2 = face_normal(pos, &faces[f2]);
        if n1.dot(&n2) < 0.9 * n1.norm() * n2.norm() {
            continue;
        }
        let g1 = [c, a, d];
        let g2 = [d, b, c];
        let m1 = face_normal(pos, &g1);
        let m2 = face_normal(pos, &g2);
        let avg = n1 + n2;
        if m1.dot(&avg) <= 0.0 || m2.dot(&avg) <= 0.0 || m1.dot(&m2) < 0.9 * m1.norm() * m2.norm() {
            continue;
        }
        faces[f1] = g1;
        faces[f2] = g2;
        dirty[f1] = true;
        dirty[f2] = true;
        existing.remove(&(a, b));
        existing.insert((c.min(d), c.max(d)));
        valence[a] -= 1;
        valence[b] -= 1;
        valence[c] += 1;
        valence[d] += 1;
        flips += 1;
    }
    flips
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{ellipse, ellipsoid, icosphere, ScalarField};

    fn moment(s: &DiscreteHypersurface, p: f64) -> f64 {
        s.integrate(&ScalarField::new(s.abs_a()).unwrap(), p).unwrap()
    }

    #[test]
    fn uniform_meshes_are_left_alone() {
        let s = icosphere(3, 1.0).unwrap();
        let frac = RemeshPolicy::default().target_fraction(&s).unwrap();
        assert!(remesh(&s, frac / curvature_scale(&s), &RemeshPolicy::default()).unwrap().is_none());
    }

    #[test]
    fn curve_split_and_collapse_preserve_moments() {
        let c = ellipse(200, 1.5, 1.0).unwrap();
        let mean = c.measure() / 200.0;
        for target in [0.6 * mean, 1.6 * mean] {
            let out = remesh(&c, target, &RemeshPolicy::default()).unwrap().unwrap();
            assert!(out.splits + out.collapses > 0);
            for p in [2.0, 3.0] {
                let rel = (moment(&out.surface, p) / moment(&c, p) - 1.0).abs();
                assert!(rel < 0.01, "p={p} rel={rel}");
            }
        }
    }

    #[test]
    fn mesh_split_and_collapse_stay_manifold_and_close() {
        let s = ellipsoid(1.3, 1.0, 0.9, 3).unwrap();
        let e = s.edge_lengths();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        for target in [0.7 * mean, 1.25 * mean] {
            let out = remesh(&s, target, &RemeshPolicy::default()).unwrap().unwrap();
            assert!(out.splits + out.collapses > 0);
            assert_eq!(out.surface.euler_characteristic(), 2);
            let rel_area = (out.surface.measure() / s.measure() - 1.0).abs();
            assert!(rel_area < 5e-3, "area change {rel_area}");
        }
    }
}
