//! P1 surface finite element operators on a [`SurfaceMesh`].
//!
//! * stiffness `a_ij = sum_K |K| grad(chi_i) . grad(chi_j)` with constant
//!   in-plane gradients per triangle,
//! * lumped mass `mbar_ii = |star(i)| / 3` (vertex quadrature of `chi_i chi_j`),
//! * consistent mass with local matrix `|K|/12 [[2,1,1],[1,2,1],[1,1,2]]`.
//!
//! Assembly is triangle-major with a fixed scatter order, so operators are
//! bitwise reproducible.

use thiserror::Error;

use crate::geometry::{self, Vec3};
use crate::mesh::{SurfaceMesh, MIN_TRIANGLE_AREA};
use crate::sparse::{CsrMatrix, DiagMatrix, SparseError};

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("non-finite sample at node {node}, component {component}")]
    NonFiniteSample { node: usize, component: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// `r` components of nodal values over `N` nodes, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    n_components: usize,
    n_nodes: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(n_components: usize, n_nodes: usize) -> Self {
        NodalField {
            n_components,
            n_nodes,
            values: vec![0.0; n_components * n_nodes],
        }
    }

    pub fn constant(n_components: usize, n_nodes: usize, value: f64) -> Self {
        NodalField {
            n_components,
            n_nodes,
            values: vec![value; n_components * n_nodes],
        }
    }

    pub fn from_components(components: Vec<Vec<f64>>) -> Result<Self, AssemblyError> {
        let n_nodes = components.first().map_or(0, Vec::len);
        for c in &components {
            if c.len() != n_nodes {
                return Err(AssemblyError::DimensionMismatch {
                    expected: n_nodes,
                    got: c.len(),
                });
            }
        }
        Ok(NodalField {
            n_components: components.len(),
            n_nodes,
            values: components.concat(),
        })
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    /// Values of every component at `node`.
    pub fn at(&self, node: usize) -> Vec<f64> {
        (0..self.n_components)
            .map(|k| self.values[k * self.n_nodes + node])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Entrywise `self - other`.
    pub fn difference(&self, other: &NodalField) -> Result<NodalField, AssemblyError> {
        self.check_shape(other)?;
        Ok(NodalField {
            n_components: self.n_components,
            n_nodes: self.n_nodes,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub(crate) fn check_shape(&self, other: &NodalField) -> Result<(), AssemblyError> {
        if self.n_components != other.n_components || self.n_nodes != other.n_nodes {
            return Err(AssemblyError::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(())
    }
}

/// Stiffness, lumped mass and consistent mass for one mesh.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub stiffness: CsrMatrix,
    pub lumped_mass: DiagMatrix,
    pub consistent_mass: CsrMatrix,
    pub total_area: f64,
}

impl FemOperators {
    pub fn assemble(mesh: &SurfaceMesh) -> Result<Self, AssemblyError> {
        Ok(FemOperators {
            stiffness: assemble_stiffness(mesh)?,
            lumped_mass: assemble_lumped_mass(mesh)?,
            consistent_mass: assemble_consistent_mass(mesh)?,
            total_area: mesh.surface_area(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.lumped_mass.len()
    }
}

/// Constant in-plane gradients of the three hat functions of a triangle.
///
/// The gradient of the hat at corner `i` is `n x e_i / |n|^2`, where `n` is
/// the (unnormalized) triangle normal and `e_i` the opposite edge walked
/// counterclockwise.
pub fn local_basis_gradients(p: [Vec3; 3]) -> Result<[Vec3; 3], AssemblyError> {
    let n = geometry::cross(geometry::sub(p[1], p[0]), geometry::sub(p[2], p[0]));
    let n2 = geometry::dot(n, n);
    if !(0.5 * n2.sqrt() >= MIN_TRIANGLE_AREA) {
        return Err(AssemblyError::DegenerateTriangle {
            triangle: 0,
            area: 0.5 * n2.sqrt(),
        });
    }
    let grad = |i: usize| {
        let e = geometry::sub(p[(i + 2) % 3], p[(i + 1) % 3]);
        geometry::scale(geometry::cross(n, e), 1.0 / n2)
    };
    Ok([grad(0), grad(1), grad(2)])
}

fn triangle_gradients(mesh: &SurfaceMesh, t: usize) -> Result<([Vec3; 3], f64), AssemblyError> {
    let pts = mesh.triangle_points(t);
    let area = mesh.triangle_area(t);
    let grads = local_basis_gradients(pts).map_err(|_| AssemblyError::DegenerateTriangle {
        triangle: t,
        area,
    })?;
    Ok((grads, area))
}

pub fn assemble_stiffness(mesh: &SurfaceMesh) -> Result<CsrMatrix, AssemblyError> {
    let n = mesh.n_vertices();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (grads, area) = triangle_gradients(mesh, t)?;
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], area * geometry::dot(grads[a], grads[b])));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &triplets)?)
}

pub fn assemble_lumped_mass(mesh: &SurfaceMesh) -> Result<DiagMatrix, AssemblyError> {
    let mut diag = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        if !(area >= MIN_TRIANGLE_AREA) {
            return Err(AssemblyError::DegenerateTriangle { triangle: t, area });
        }
        for &v in tri {
            diag[v] += area / 3.0;
        }
    }
    Ok(DiagMatrix::new(diag))
}

pub fn assemble_consistent_mass(mesh: &SurfaceMesh) -> Result<CsrMatrix, AssemblyError> {
    let n = mesh.n_vertices();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        if !(area >= MIN_TRIANGLE_AREA) {
            return Err(AssemblyError::DegenerateTriangle { triangle: t, area });
        }
        for a in 0..3 {
            for b in 0..3 {
                let w = if a == b { area / 6.0 } else { area / 12.0 };
                triplets.push((tri[a], tri[b], w));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &triplets)?)
}

/// Nodal interpolant of a vector-valued function: `g(x_i, out)` fills the
/// `n_components` values at vertex `x_i`.
pub fn interpolate(
    mesh: &SurfaceMesh,
    n_components: usize,
    g: impl Fn(Vec3, &mut [f64]),
) -> Result<NodalField, AssemblyError> {
    let n = mesh.n_vertices();
    let mut field = NodalField::zeros(n_components, n);
    let mut buf = vec![0.0; n_components];
    for (i, &x) in mesh.vertices().iter().enumerate() {
        g(x, &mut buf);
        for (k, &v) in buf.iter().enumerate() {
            if !v.is_finite() {
                return Err(AssemblyError::NonFiniteSample {
                    node: i,
                    component: k,
                });
            }
            field.values[k * n + i] = v;
        }
    }
    Ok(field)
}

pub fn interpolate_scalar(
    mesh: &SurfaceMesh,
    g: impl Fn(Vec3) -> f64,
) -> Result<NodalField, AssemblyError> {
    interpolate(mesh, 1, |x, out| out[0] = g(x))
}

/// Lumped norm `sqrt(sum_k xi_k^T Mbar xi_k)`.
pub fn lumped_norm(lumped_mass: &DiagMatrix, u: &NodalField) -> Result<f64, AssemblyError> {
    if u.n_nodes() != lumped_mass.len() {
        return Err(AssemblyError::DimensionMismatch {
            expected: lumped_mass.len(),
            got: u.n_nodes(),
        });
    }
    let m = lumped_mass.values();
    let sq: f64 = (0..u.n_components())
        .map(|k| u.component(k).iter().zip(m).map(|(v, w)| w * v * v).sum::<f64>())
        .sum();
    Ok(sq.max(0.0).sqrt())
}

/// `L2(Gamma_h)` norm of the P1 function: `sqrt(sum_k xi_k^T M xi_k)`.
pub fn l2_norm(consistent_mass: &CsrMatrix, u: &NodalField) -> Result<f64, AssemblyError> {
    if u.n_nodes() != consistent_mass.n_rows() {
        return Err(AssemblyError::DimensionMismatch {
            expected: consistent_mass.n_rows(),
            got: u.n_nodes(),
        });
    }
    let mut buf = vec![0.0; u.n_nodes()];
    let mut sq = 0.0;
    for k in 0..u.n_components() {
        let xi = u.component(k);
        consistent_mass.matvec_into(xi, &mut buf);
        sq += xi.iter().zip(&buf).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(sq.max(0.0).sqrt())
}
