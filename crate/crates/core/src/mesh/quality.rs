use std::fmt;

use super::{Edge, SurfaceMesh};
use crate::geometry;

/// Triangles with a smaller area fail validation.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Slack allowed above pi before an angle sum counts as a violation.
pub const ANGLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NonFiniteVertex { vertex: usize },
    /// Edge with an incidence count other than two.
    NotClosed { edge: Edge, incidences: usize },
    /// Both triangles traverse the shared edge in the same direction.
    OrientationMismatch { edge: Edge },
    Disconnected { components: usize },
    IsolatedVertex { vertex: usize },
    DegenerateTriangle { triangle: usize, area: f64 },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::NonFiniteVertex { vertex } => {
                write!(f, "vertex {vertex} has a non-finite coordinate")
            }
            ValidationIssue::NotClosed { edge, incidences } => write!(
                f,
                "edge ({}, {}) has {incidences} incident triangles, expected 2",
                edge.0, edge.1
            ),
            ValidationIssue::OrientationMismatch { edge } => write!(
                f,
                "edge ({}, {}) is traversed in the same direction by both triangles",
                edge.0, edge.1
            ),
            ValidationIssue::Disconnected { components } => {
                write!(f, "mesh has {components} connected components")
            }
            ValidationIssue::IsolatedVertex { vertex } => {
                write!(f, "vertex {vertex} belongs to no triangle")
            }
            ValidationIssue::DegenerateTriangle { triangle, area } => {
                write!(f, "triangle {triangle} has area {area:e}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&ValidationIssue) -> bool) -> usize {
        self.issues.iter().filter(|i| pred(i)).count()
    }

    pub fn summary(&self) -> String {
        if self.issues.is_empty() {
            return "ok".to_string();
        }
        let shown: Vec<String> = self.issues.iter().take(5).map(|i| i.to_string()).collect();
        let mut s = shown.join("; ");
        if self.issues.len() > 5 {
            s.push_str(&format!("; and {} more", self.issues.len() - 5));
        }
        s
    }
}

/// Checks closedness, orientation consistency, connectivity and minimum
/// triangle area, collecting every failure instead of stopping at the first.
pub fn validate(mesh: &SurfaceMesh) -> ValidationReport {
    let mut issues = Vec::new();

    for (i, p) in mesh.vertices().iter().enumerate() {
        if p.iter().any(|c| !c.is_finite()) {
            issues.push(ValidationIssue::NonFiniteVertex { vertex: i });
        }
    }

    let triangles = mesh.triangles();
    for (edge, incident) in mesh.edge_map() {
        if incident.len() != 2 {
            issues.push(ValidationIssue::NotClosed {
                edge: *edge,
                incidences: incident.len(),
            });
            continue;
        }
        let d0 = traverses_forward(&triangles[incident[0]], edge);
        let d1 = traverses_forward(&triangles[incident[1]], edge);
        if d0 == d1 {
            issues.push(ValidationIssue::OrientationMismatch { edge: *edge });
        }
    }

    let n = mesh.n_vertices();
    let mut used = vec![false; n];
    for tri in triangles {
        for &v in tri {
            used[v] = true;
        }
    }
    for (v, &u) in used.iter().enumerate() {
        if !u {
            issues.push(ValidationIssue::IsolatedVertex { vertex: v });
        }
    }

    let components = count_components(mesh);
    if components > 1 {
        issues.push(ValidationIssue::Disconnected { components });
    }

    for t in 0..triangles.len() {
        let area = mesh.triangle_area(t);
        // NaN areas fail too.
        if !(area >= MIN_TRIANGLE_AREA) {
            issues.push(ValidationIssue::DegenerateTriangle { triangle: t, area });
        }
    }

    ValidationReport { issues }
}

/// True when the triangle walks the edge from `edge.0` to `edge.1`.
fn traverses_forward(tri: &[usize; 3], edge: &Edge) -> bool {
    (0..3).any(|k| tri[k] == edge.0 && tri[(k + 1) % 3] == edge.1)
}

/// Connected components of the vertex graph restricted to used vertices.
fn count_components(mesh: &SurfaceMesh) -> usize {
    let n = mesh.n_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut used = vec![false; n];
    for tri in mesh.triangles() {
        for k in 0..3 {
            used[tri[k]] = true;
            let a = find(&mut parent, tri[k]);
            let b = find(&mut parent, tri[(k + 1) % 3]);
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut roots = std::collections::BTreeSet::new();
    for (v, _) in used.iter().enumerate().filter(|(_, &u)| u) {
        roots.insert(find(&mut parent, v));
    }
    roots.len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleViolation {
    pub edge: Edge,
    /// Sum of the two angles opposite the edge, in radians.
    pub angle_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaunayReport {
    pub violations: Vec<AngleViolation>,
    pub worst_sum: f64,
    pub pass: bool,
}

/// For every edge shared by two triangles, sums the two angles opposite the
/// edge and records the edges where the sum exceeds pi.
///
/// Angles are measured in each triangle's own plane from 3D dot and cross
/// products.
pub fn check_angle_condition(mesh: &SurfaceMesh) -> DelaunayReport {
    let mut violations = Vec::new();
    let mut worst_sum = 0.0f64;
    for (edge, incident) in mesh.edge_map() {
        if incident.len() != 2 {
            continue;
        }
        let sum: f64 = incident
            .iter()
            .map(|&t| opposite_angle(mesh, t, edge))
            .sum();
        worst_sum = worst_sum.max(sum);
        if sum > std::f64::consts::PI + ANGLE_TOLERANCE {
            violations.push(AngleViolation {
                edge: *edge,
                angle_sum: sum,
            });
        }
    }
    DelaunayReport {
        pass: violations.is_empty(),
        violations,
        worst_sum,
    }
}

/// Angle of triangle `t` at the corner not on `edge`.
pub fn opposite_angle(mesh: &SurfaceMesh, t: usize, edge: &Edge) -> f64 {
    let tri = mesh.triangles()[t];
    let apex = tri
        .iter()
        .copied()
        .find(|&v| v != edge.0 && v != edge.1)
        .expect("edge belongs to triangle");
    let p = mesh.vertices();
    geometry::angle_at(p[apex], p[edge.0], p[edge.1])
}
