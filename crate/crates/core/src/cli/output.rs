//! CSV number formatting and legacy ASCII VTK polydata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::assembly::NodalField;
use crate::geometry::Vec3;
use crate::mesh::SurfaceMesh;

#[derive(Debug, Error)]
pub enum VtkError {
    #[error("field has {got} nodes, mesh has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("VTK parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scientific notation with six significant digits and a two-digit
/// exponent, e.g. `5.44400e-04`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn write_vtk_string(mesh: &SurfaceMesh, field: &NodalField, names: &[&str]) -> Result<String, VtkError> {
    let n = mesh.n_vertices();
    if field.n_nodes() != n {
        return Err(VtkError::SizeMismatch {
            expected: n,
            got: field.n_nodes(),
        });
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nsurf-rd nodal field\nASCII\nDATASET POLYDATA\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(s, "POLYGONS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    for k in 0..field.n_components() {
        let name = names.get(k).map_or_else(|| format!("u{k}"), |s| s.to_string());
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in field.component(k) {
            let _ = writeln!(s, "{v:?}");
        }
    }
    Ok(s)
}

pub fn write_vtk(mesh: &SurfaceMesh, field: &NodalField, names: &[&str], path: impl AsRef<Path>) -> Result<(), VtkError> {
    fs::write(path, write_vtk_string(mesh, field, names)?)?;
    Ok(())
}

/// Contents of a polydata file written by [`write_vtk`].
#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub points: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub scalars: Vec<(String, Vec<f64>)>,
}

pub fn read_vtk(path: impl AsRef<Path>) -> Result<VtkData, VtkError> {
    read_vtk_str(&fs::read_to_string(path)?)
}

pub fn read_vtk_str(text: &str) -> Result<VtkData, VtkError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: &str| VtkError::Parse {
        line,
        message: message.to_string(),
    };
    let mut next = |what: &str| lines.next().ok_or_else(|| err(0, &format!("unexpected end of file, expected {what}")));
    let (l, header) = next("header")?;
    if !header.starts_with("# vtk DataFile") {
        return Err(err(l, "missing '# vtk DataFile' header"));
    }
    next("title")?;
    let (l, fmt) = next("format")?;
    if fmt != "ASCII" {
        return Err(err(l, "only ASCII files are supported"));
    }
    let (l, ds) = next("dataset")?;
    if ds != "DATASET POLYDATA" {
        return Err(err(l, "expected DATASET POLYDATA"));
    }
    let count = |l: usize, line: &str, keyword: &str| -> Result<usize, VtkError> {
        let mut it = line.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(err(l, &format!("expected {keyword}")));
        }
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(l, &format!("bad {keyword} count")))
    };
    let parse_f = |l: usize, t: &str| t.parse::<f64>().map_err(|_| err(l, &format!("bad number '{t}'")));

    let (l, line) = next("POINTS")?;
    let n = count(l, line, "POINTS")?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, line) = next("point")?;
        let v: Vec<f64> = line.split_whitespace().map(|t| parse_f(l, t)).collect::<Result<_, _>>()?;
        if v.len() != 3 {
            return Err(err(l, "point needs three coordinates"));
        }
        points.push([v[0], v[1], v[2]]);
    }
    let (l, line) = next("POLYGONS")?;
    let nt = count(l, line, "POLYGONS")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (l, line) = next("polygon")?;
        let v: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(l, &format!("bad index '{t}'"))))
            .collect::<Result<_, _>>()?;
        if v.len() != 4 || v[0] != 3 {
            return Err(err(l, "only triangles are supported"));
        }
        triangles.push([v[1], v[2], v[3]]);
    }
    let mut scalars = Vec::new();
    if let Some((l, line)) = lines.next() {
        let np = count(l, line, "POINT_DATA")?;
        while let Some((l, line)) = lines.next() {
            let mut it = line.split_whitespace();
            if it.next() != Some("SCALARS") {
                return Err(err(l, "expected SCALARS"));
            }
            let name = it.next().ok_or_else(|| err(l, "missing scalar name"))?.to_string();
            match lines.next() {
                Some((_, t)) if t.starts_with("LOOKUP_TABLE") => {}
                Some((l, _)) => return Err(err(l, "expected LOOKUP_TABLE")),
                None => return Err(err(l, "unexpected end of file")),
            }
            let mut values = Vec::with_capacity(np);
            for _ in 0..np {
                let (l, t) = lines.next().ok_or_else(|| err(l, "truncated scalar block"))?;
                values.push(parse_f(l, t)?);
            }
            scalars.push((name, values));
        }
    }
    Ok(VtkData {
        points,
        triangles,
        scalars,
    })
}
