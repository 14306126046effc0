//! ASCII OFF: `OFF`, then `V F 0`, then V coordinate lines and F lines
//! `3 i j k` with 0-based indices. `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, SurfaceMesh};

pub fn write_off_string(mesh: &SurfaceMesh) -> String {
    let mut out = String::with_capacity(64 * (mesh.n_vertices() + mesh.n_triangles()));
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.n_vertices(), mesh.n_triangles());
    for p in mesh.vertices() {
        // `{:?}` prints the shortest representation that round-trips exactly.
        let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    out
}

pub fn write_off(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_off_string(mesh))?;
    Ok(())
}

pub fn read_off(path: impl AsRef<Path>) -> Result<SurfaceMesh, MeshError> {
    read_off_str(&std::fs::read_to_string(path)?)
}

pub fn read_off_str(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, message: String| MeshError::Parse { line, message };

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    // Some writers put the counts on the header line.
    let counts_inline = header.strip_prefix("OFF").map(str::trim);
    let (counts_line, counts) = match counts_inline {
        Some("") => lines
            .next()
            .ok_or_else(|| parse_err(line + 1, "missing counts line".into()))?,
        Some(rest) => (line, rest),
        None => return Err(parse_err(line, format!("expected 'OFF' header, found '{header}'"))),
    };
    let nums = parse_fields::<usize>(counts, counts_line)?;
    if nums.len() < 2 {
        return Err(parse_err(counts_line, "expected 'V F E' counts".into()));
    }
    let (nv, nf) = (nums[0], nums[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(counts_line, format!("expected {nv} vertex lines")))?;
        let c = parse_fields::<f64>(l, ln)?;
        if c.len() < 3 {
            return Err(parse_err(ln, "vertex line needs three coordinates".into()));
        }
        vertices.push([c[0], c[1], c[2]]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(counts_line, format!("expected {nf} face lines")))?;
        let f = parse_fields::<usize>(l, ln)?;
        if f.len() != 4 || f[0] != 3 {
            return Err(parse_err(ln, "only triangular faces '3 i j k' are supported".into()));
        }
        triangles.push([f[1], f[2], f[3]]);
    }
    SurfaceMesh::from_parts(vertices, triangles)
}

fn parse_fields<T: std::str::FromStr>(line: &str, line_no: usize) -> Result<Vec<T>, MeshError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| MeshError::Parse {
                line: line_no,
                message: format!("cannot parse '{tok}'"),
            })
        })
        .collect()
}
