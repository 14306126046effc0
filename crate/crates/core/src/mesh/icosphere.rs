use std::collections::HashMap;

use super::{orient_outward, Edge, MeshError, SurfaceMesh};
use crate::geometry::{self, Vec3};

/// Largest accepted subdivision level (655 362 vertices).
pub const MAX_ICOSPHERE_LEVEL: u32 = 8;

/// Regular icosahedron inscribed in the unit sphere, subdivided `level`
/// times by edge midpoints, each new vertex projected radially onto the
/// sphere. Gives `10 * 4^level + 2` vertices and `20 * 4^level` triangles.
///
/// The icosahedron is placed with a vertex at each pole, so caps around
/// `(0, 0, 1)` are resolved at every level.
pub fn generate_icosphere(level: u32) -> Result<SurfaceMesh, MeshError> {
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(MeshError::LevelOutOfRange(level));
    }
    let (mut vertices, mut triangles) = icosahedron();
    for _ in 0..level {
        let mut midpoints: HashMap<Edge, usize> = HashMap::with_capacity(triangles.len() * 3 / 2);
        let mut refined = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let ab = midpoint(&mut vertices, &mut midpoints, a, b);
            let bc = midpoint(&mut vertices, &mut midpoints, b, c);
            let ca = midpoint(&mut vertices, &mut midpoints, c, a);
            refined.push([a, ab, ca]);
            refined.push([b, bc, ab]);
            refined.push([c, ca, bc]);
            refined.push([ab, bc, ca]);
        }
        triangles = refined;
    }
    SurfaceMesh::from_parts(vertices, triangles)
}

fn midpoint(vertices: &mut Vec<Vec3>, cache: &mut HashMap<Edge, usize>, a: usize, b: usize) -> usize {
    *cache.entry(Edge::new(a, b)).or_insert_with(|| {
        let p = geometry::normalize(geometry::add(vertices[a], vertices[b]));
        vertices.push(p);
        vertices.len() - 1
    })
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    use std::f64::consts::PI;
    let z = 1.0 / 5f64.sqrt();
    let r = 2.0 / 5f64.sqrt();
    let mut vertices = Vec::with_capacity(12);
    vertices.push([0.0, 0.0, 1.0]);
    for k in 0..5 {
        let phi = 2.0 * PI * k as f64 / 5.0;
        vertices.push([r * phi.cos(), r * phi.sin(), z]);
    }
    for k in 0..5 {
        let phi = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        vertices.push([r * phi.cos(), r * phi.sin(), -z]);
    }
    vertices.push([0.0, 0.0, -1.0]);

    let upper = |k: usize| 1 + k % 5;
    let lower = |k: usize| 6 + k % 5;
    let mut triangles = Vec::with_capacity(20);
    for k in 0..5 {
        triangles.push([0, upper(k), upper(k + 1)]);
        triangles.push([upper(k), lower(k), upper(k + 1)]);
        triangles.push([upper(k + 1), lower(k), lower(k + 1)]);
        triangles.push([11, lower(k + 1), lower(k)]);
    }
    orient_outward(&vertices, &mut triangles);
    (vertices, triangles)
}
