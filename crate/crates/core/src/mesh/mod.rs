//! Closed triangulated surfaces.
//!
//! A [`SurfaceMesh`] is an immutable set of vertices and counterclockwise
//! (outward) oriented triangles together with an edge map from each unordered
//! vertex pair to its incident triangles. Generators produce sphere meshes;
//! [`validate`] and [`check_angle_condition`] report on arbitrary input.

mod fibonacci;
mod icosphere;
mod off;
mod quality;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{self, Vec3};

pub use fibonacci::{generate_fibonacci_delaunay, sphere_delaunay};
pub use icosphere::{generate_icosphere, MAX_ICOSPHERE_LEVEL};
pub use off::{read_off, read_off_str, write_off, write_off_string};
#[cfg(test)]
pub(crate) use quality::tests as quality_tests;
pub use quality::{
    check_angle_condition, opposite_angle, validate, AngleViolation, DelaunayReport, ValidationIssue,
    ValidationReport, ANGLE_TOLERANCE, MIN_TRIANGLE_AREA,
};

/// Unordered vertex pair, stored with the smaller index first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("icosphere level {0} out of range (maximum {max})", max = MAX_ICOSPHERE_LEVEL)]
    LevelOutOfRange(u32),
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("triangle {triangle} references vertex {vertex}, but the mesh has {n_vertices} vertices")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        n_vertices: usize,
    },
    #[error("triangle {0} repeats a vertex index")]
    RepeatedIndex(usize),
    #[error("coincident points {0} and {1}")]
    CoincidentPoints(usize, usize),
    #[error("hull construction failed at point {point}: {reason}")]
    HullDegenerate { point: usize, reason: String },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("OFF parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Vertices on a closed surface, oriented triangles and the edge map.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edge_map: BTreeMap<Edge, Vec<usize>>,
}

impl SurfaceMesh {
    /// Builds a mesh from raw parts.
    ///
    /// Only index sanity is enforced here; topology problems (open edges,
    /// flipped triangles, ...) are left for [`validate`] to report.
    pub fn from_parts(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        let mut edge_map: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        vertex: v,
                        n_vertices: n,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedIndex(t));
            }
            for k in 0..3 {
                edge_map
                    .entry(Edge::new(tri[k], tri[(k + 1) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        Ok(SurfaceMesh {
            vertices,
            triangles,
            edge_map,
        })
    }

    /// Like [`SurfaceMesh::from_parts`] but rejects meshes that fail [`validate`].
    pub fn from_parts_validated(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let mesh = Self::from_parts(vertices, triangles)?;
        let report = validate(&mesh);
        if !report.is_valid() {
            return Err(MeshError::Invalid(report.summary()));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edge_map(&self) -> &BTreeMap<Edge, Vec<usize>> {
        &self.edge_map
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_map.len()
    }

    /// Corner positions of triangle `t`.
    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        geometry::triangle_area(a, b, c)
    }

    /// Copy of the mesh with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SurfaceMesh {
        SurfaceMesh {
            vertices: self
                .vertices
                .iter()
                .map(|&p| geometry::scale(p, factor))
                .collect(),
            triangles: self.triangles.clone(),
            edge_map: self.edge_map.clone(),
        }
    }

    /// Mesh size `h`: the largest triangle diameter, i.e. the longest edge.
    pub fn mesh_size(&self) -> f64 {
        self.edge_map
            .keys()
            .map(|e| geometry::norm(geometry::sub(self.vertices[e.0], self.vertices[e.1])))
            .fold(0.0, f64::max)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }
}

/// Free-function form of [`SurfaceMesh::mesh_size`].
pub fn mesh_size(mesh: &SurfaceMesh) -> f64 {
    mesh.mesh_size()
}

/// Free-function form of [`SurfaceMesh::surface_area`].
pub fn surface_area(mesh: &SurfaceMesh) -> f64 {
    mesh.surface_area()
}

/// Flips triangles whose normal points towards the origin. Valid for
/// surfaces that are star-shaped about the origin, which covers every
/// generated sphere mesh.
pub(crate) fn orient_outward(vertices: &[Vec3], triangles: &mut [[usize; 3]]) {
    for tri in triangles.iter_mut() {
        let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        let n = geometry::cross(geometry::sub(b, a), geometry::sub(c, a));
        let centroid = geometry::scale(geometry::add(geometry::add(a, b), c), 1.0 / 3.0);
        if geometry::dot(n, centroid) < 0.0 {
            tri.swap(1, 2);
        }
    }
}
