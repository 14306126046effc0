//! Compressed sparse row and diagonal matrices, and a Jacobi-preconditioned
//! conjugate-gradient solver for the symmetric positive-definite systems
//! `M + s A` that every implicit step solves, plus a Gauss-Seidel solver
//! whose iterates respect the sign structure of M-matrices.

mod cg;
mod csr;
mod diag;
mod gauss_seidel;

use thiserror::Error;

pub use cg::{cg_solve, cg_solve_preconditioned, CgOptions, JacobiPreconditioner, Preconditioner, SolveStats};
pub use csr::CsrMatrix;
pub use diag::DiagMatrix;
pub use gauss_seidel::gauss_seidel_solve;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("CG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-positive diagonal entry {value:e} at row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },
    #[error("non-finite value in the right-hand side or iterate")]
    NonFinite,
}

/// A square linear operator `y = S x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes `S x` into `y`; both slices have length [`LinearOperator::dim`].
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn diagonal(&self) -> Vec<f64>;
}

/// `diag + scale * matrix` without forming the sum.
#[derive(Debug, Clone, Copy)]
pub struct Shifted<'a> {
    pub diag: &'a DiagMatrix,
    pub matrix: &'a CsrMatrix,
    pub scale: f64,
}

impl LinearOperator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec_into(x, y);
        for ((yi, &d), &xi) in y.iter_mut().zip(self.diag.values()).zip(x) {
            *yi = d * xi + self.scale * *yi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.matrix
            .diagonal()
            .iter()
            .zip(self.diag.values())
            .map(|(&a, &d)| d + self.scale * a)
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Column `j` of `(Mbar + s A)^{-1} Mbar`, from one CG solve with right-hand
/// side `Mbar e_j`.
///
/// For a lumped mass and a stiffness matrix with nonpositive off-diagonal
/// entries, every column is entrywise nonnegative and the columns sum to the
/// all-ones vector.
pub fn operator_column(
    lumped_mass: &DiagMatrix,
    stiffness: &CsrMatrix,
    s: f64,
    j: usize,
    opts: &CgOptions,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let n = lumped_mass.len();
    if stiffness.n_rows() != n || j >= n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            got: stiffness.n_rows().max(j + 1),
        });
    }
    let mut b = vec![0.0; n];
    b[j] = lumped_mass.values()[j];
    let op = Shifted {
        diag: lumped_mass,
        matrix: stiffness,
        scale: s,
    };
    cg_solve(&op, &b, None, opts)
}
