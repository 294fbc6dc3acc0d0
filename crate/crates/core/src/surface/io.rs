//! File formats: Wavefront OBJ for meshes, a JSON array of `[x, y]` points
//! for curves (implicitly closed), and one-value-per-line CSV for fields.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{build_surface, Connectivity, DiscreteHypersurface, Dimension, Point, ScalarField};
use crate::error::{Error, Result};

pub fn parse_obj(text: &str, origin: &Path) -> Result<DiscreteHypersurface> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let bad = |msg: &str| Error::parse(origin, format!("line {}: {msg}", lineno + 1));
        match tokens.next() {
            Some("v") => {
                let c: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(&e.to_string()))?;
                if c.len() != 3 {
                    return Err(bad("vertex needs three coordinates"));
                }
                positions.push(Point::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|_| bad("bad face index"))?;
                        let resolved = if i < 0 { positions.len() as i64 + i } else { i - 1 };
                        usize::try_from(resolved).map_err(|_| bad("face index out of range"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs at least three vertices"));
                }
                // Fan-triangulate polygons.
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    build_surface(positions, Connectivity::Triangles(faces))
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<DiscreteHypersurface> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

pub fn obj_string(surface: &DiscreteHypersurface) -> Result<String> {
    let faces = surface.connectivity().triangles().ok_or_else(|| {
        Error::InvalidInput("OBJ output requires a triangle mesh".into())
    })?;
    let mut out = String::with_capacity(surface.vertex_count() * 60);
    for p in surface.positions() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    Ok(out)
}

pub fn write_obj(path: impl AsRef<Path>, surface: &DiscreteHypersurface) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, obj_string(surface)?).map_err(|e| Error::io(path, e))
}

pub fn parse_curve_json(text: &str, origin: &Path) -> Result<DiscreteHypersurface> {
    let pts: Vec<[f64; 2]> =
        serde_json::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    let len = pts.len();
    build_surface(
        pts.into_iter().map(|[x, y]| Point::new(x, y, 0.0)).collect(),
        Connectivity::Loop { len },
    )
}

pub fn read_curve_json(path: impl AsRef<Path>) -> Result<DiscreteHypersurface> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve_json(&text, path)
}

pub fn curve_json_string(surface: &DiscreteHypersurface) -> Result<String> {
    if surface.dimension() != Dimension::Curve {
        return Err(Error::InvalidInput("curve JSON output requires a polygon".into()));
    }
    let pts: Vec<[f64; 2]> = surface.positions().iter().map(|p| [p.x, p.y]).collect();
    Ok(serde_json::to_string(&pts)?)
}

pub fn write_curve_json(path: impl AsRef<Path>, surface: &DiscreteHypersurface) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, curve_json_string(surface)?).map_err(|e| Error::io(path, e))
}

/// Reads a mesh (`.obj`) or a curve (anything ending in `.json`).
pub fn read_surface(path: impl AsRef<Path>) -> Result<DiscreteHypersurface> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("obj") => read_obj(path),
        Some(ext) if ext.eq_ignore_ascii_case("json") => read_curve_json(path),
        _ => Err(Error::InvalidInput(format!(
            "{}: expected a .obj mesh or a .json curve",
            path.display()
        ))),
    }
}

pub fn write_surface(path: impl AsRef<Path>, surface: &DiscreteHypersurface) -> Result<()> {
    match surface.dimension() {
        Dimension::Curve => write_curve_json(path, surface),
        Dimension::Surface => write_obj(path, surface),
    }
}

pub fn read_scalar_csv(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let cell = rec
            .get(0)
            .ok_or_else(|| Error::parse(path, format!("row {} is empty", i + 1)))?;
        values.push(
            cell.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(path, format!("row {}: {e}", i + 1)))?,
        );
    }
    ScalarField::new(values)
}

pub fn write_scalar_csv(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    for v in field.values() {
        w.write_record([v.to_string()])
            .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{icosphere, regular_polygon};

    #[test]
    fn obj_round_trip_is_exact() {
        let s = icosphere(2, 1.3).unwrap();
        let back = parse_obj(&obj_string(&s).unwrap(), Path::new("mem")).unwrap();
        assert_eq!(s.positions(), back.positions());
        assert_eq!(s.connectivity(), back.connectivity());
    }

    #[test]
    fn quads_are_fan_triangulated() {
        let cube = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
                    f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n";
        let s = parse_obj(cube, Path::new("cube")).unwrap();
        assert_eq!(s.connectivity().triangles().unwrap().len(), 12);
        assert!((s.measure() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn curve_json_round_trip() {
        let c = regular_polygon(17, 2.0).unwrap();
        let back = parse_curve_json(&curve_json_string(&c).unwrap(), Path::new("mem")).unwrap();
        assert_eq!(c.positions(), back.positions());
    }

    #[test]
    fn scalar_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let f = ScalarField::new(vec![0.1, -2.5, 1e-300, 3.0]).unwrap();
        write_scalar_csv(&p, &f).unwrap();
        assert_eq!(read_scalar_csv(&p).unwrap(), f);
    }

    #[test]
    fn garbage_obj_reports_parse_error() {
        let err = parse_obj("v 1 2\nf 1 2 3\n", Path::new("x.obj")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
