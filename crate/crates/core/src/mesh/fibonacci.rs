use std::collections::HashMap;

use super::{MeshError, SurfaceMesh};
use crate::geometry::{self, Vec3};

const MIN_POINTS: usize = 12;

/// Points closer than this are treated as coincident.
const COINCIDENT_TOLERANCE: f64 = 1e-12;

/// Points this close to a face plane are not considered to see the face.
const PLANE_TOLERANCE: f64 = 1e-13;

/// `n_points` Fibonacci-lattice points on the unit sphere, triangulated by
/// their convex hull. For points on a sphere the hull is the spherical
/// Delaunay triangulation.
pub fn generate_fibonacci_delaunay(n_points: usize) -> Result<SurfaceMesh, MeshError> {
    if n_points < MIN_POINTS {
        return Err(MeshError::TooFewPoints {
            min: MIN_POINTS,
            got: n_points,
        });
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let n = n_points as f64;
    let points = (0..n_points)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n;
            let r = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect();
    sphere_delaunay(points)
}

/// Triangulates points lying on a sphere centred at the origin via their
/// convex hull. Every point must be a hull vertex.
pub fn sphere_delaunay(points: Vec<Vec3>) -> Result<SurfaceMesh, MeshError> {
    if points.len() < 4 {
        return Err(MeshError::TooFewPoints {
            min: 4,
            got: points.len(),
        });
    }
    check_coincident(&points)?;
    let triangles = Hull::build(&points)?;
    SurfaceMesh::from_parts(points, triangles)
}

fn check_coincident(points: &[Vec3]) -> Result<(), MeshError> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .partial_cmp(&points[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in order.windows(2) {
        let d = geometry::norm(geometry::sub(points[w[0]], points[w[1]]));
        if d < COINCIDENT_TOLERANCE {
            return Err(MeshError::CoincidentPoints(w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    Ok(())
}

struct Face {
    v: [usize; 3],
    alive: bool,
    conflicts: Vec<usize>,
}

/// Incremental 3D convex hull with conflict lists.
struct Hull<'a> {
    points: &'a [Vec3],
    faces: Vec<Face>,
    /// Directed edge `(a, b)` -> the face that walks it counterclockwise.
    edge_face: HashMap<(usize, usize), usize>,
    point_face: Vec<Option<usize>>,
}

impl<'a> Hull<'a> {
    fn build(points: &'a [Vec3]) -> Result<Vec<[usize; 3]>, MeshError> {
        let seed = initial_tetrahedron(points)?;
        let mut hull = Hull {
            points,
            faces: Vec::new(),
            edge_face: HashMap::new(),
            point_face: vec![None; points.len()],
        };
        let [a, b, c, d] = seed;
        let centroid = geometry::scale(
            geometry::add(
                geometry::add(points[a], points[b]),
                geometry::add(points[c], points[d]),
            ),
            0.25,
        );
        for mut f in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
            let n = geometry::orient3d(points[f[0]], points[f[1]], points[f[2]], centroid);
            if n > 0.0 {
                f.swap(1, 2);
            }
            hull.add_face(f);
        }
        let initial: Vec<usize> = (0..4).collect();
        for p in 0..points.len() {
            if seed.contains(&p) {
                continue;
            }
            if !hull.assign(p, &initial) {
                return Err(MeshError::HullDegenerate {
                    point: p,
                    reason: "point is not outside the seed tetrahedron".into(),
                });
            }
        }

        for p in 0..points.len() {
            if seed.contains(&p) {
                continue;
            }
            hull.insert(p)?;
        }

        Ok(hull
            .faces
            .into_iter()
            .filter(|f| f.alive)
            .map(|f| f.v)
            .collect())
    }

    fn add_face(&mut self, v: [usize; 3]) -> usize {
        let id = self.faces.len();
        for k in 0..3 {
            self.edge_face.insert((v[k], v[(k + 1) % 3]), id);
        }
        self.faces.push(Face {
            v,
            alive: true,
            conflicts: Vec::new(),
        });
        id
    }

    fn sees(&self, face: usize, p: usize) -> bool {
        let [a, b, c] = self.faces[face].v;
        let pts = self.points;
        geometry::orient3d(pts[a], pts[b], pts[c], pts[p]) > PLANE_TOLERANCE
    }

    /// Attaches `p` to the first candidate face it sees.
    fn assign(&mut self, p: usize, candidates: &[usize]) -> bool {
        for &f in candidates {
            if self.sees(f, p) {
                self.faces[f].conflicts.push(p);
                self.point_face[p] = Some(f);
                return true;
            }
        }
        self.point_face[p] = None;
        false
    }

    fn insert(&mut self, p: usize) -> Result<(), MeshError> {
        let start = self.point_face[p].ok_or_else(|| MeshError::HullDegenerate {
            point: p,
            reason: "point lies inside or on the current hull".into(),
        })?;

        // Visible faces form a connected patch around `start`.
        let mut visible = vec![start];
        let mut is_visible: HashMap<usize, bool> = HashMap::new();
        is_visible.insert(start, true);
        let mut i = 0;
        while i < visible.len() {
            let f = visible[i];
            i += 1;
            let v = self.faces[f].v;
            for k in 0..3 {
                let g = self.edge_face[&(v[(k + 1) % 3], v[k])];
                if is_visible.contains_key(&g) {
                    continue;
                }
                let vis = self.sees(g, p);
                is_visible.insert(g, vis);
                if vis {
                    visible.push(g);
                }
            }
        }

        let mut horizon = Vec::new();
        for &f in &visible {
            let v = self.faces[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let g = self.edge_face[&(b, a)];
                if !is_visible[&g] {
                    horizon.push((a, b));
                }
            }
        }

        let mut orphans = Vec::new();
        for &f in &visible {
            let face = &mut self.faces[f];
            face.alive = false;
            orphans.append(&mut face.conflicts);
            let v = face.v;
            for k in 0..3 {
                self.edge_face.remove(&(v[k], v[(k + 1) % 3]));
            }
        }

        let new_faces: Vec<usize> = horizon.iter().map(|&(a, b)| self.add_face([a, b, p])).collect();

        for q in orphans {
            if q == p {
                continue;
            }
            if !self.assign(q, &new_faces) {
                return Err(MeshError::HullDegenerate {
                    point: q,
                    reason: format!("point fell inside the hull after inserting point {p}"),
                });
            }
        }
        self.point_face[p] = None;
        Ok(())
    }
}

fn initial_tetrahedron(points: &[Vec3]) -> Result<[usize; 4], MeshError> {
    let a = 0;
    let dist = |i: usize, j: usize| geometry::norm(geometry::sub(points[i], points[j]));
    let b = (0..points.len())
        .max_by(|&i, &j| dist(a, i).total_cmp(&dist(a, j)))
        .unwrap();
    let ab = geometry::sub(points[b], points[a]);
    let line_dist = |i: usize| geometry::norm(geometry::cross(ab, geometry::sub(points[i], points[a])));
    let c = (0..points.len())
        .max_by(|&i, &j| line_dist(i).total_cmp(&line_dist(j)))
        .unwrap();
    let vol = |i: usize| geometry::orient3d(points[a], points[b], points[c], points[i]).abs();
    let d = (0..points.len())
        .max_by(|&i, &j| vol(i).total_cmp(&vol(j)))
        .unwrap();
    if vol(d) <= PLANE_TOLERANCE {
        return Err(MeshError::HullDegenerate {
            point: d,
            reason: "all points are coplanar".into(),
        });
    }
    Ok([a, b, c, d])
}
