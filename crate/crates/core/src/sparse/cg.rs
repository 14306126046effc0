use super::{dot, norm2, LinearOperator, SparseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    Jacobi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target for `||b - S x|| / ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-10,
            max_iter: 10_000,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    /// True (recomputed) relative residual of the returned iterate.
    pub final_relative_residual: f64,
}

/// Inverse of the operator diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(diag: &[f64]) -> Result<Self, SparseError> {
        let inv_diag = diag
            .iter()
            .enumerate()
            .map(|(row, &value)| {
                if value > 0.0 {
                    Ok(1.0 / value)
                } else {
                    Err(SparseError::NonPositiveDiagonal { row, value })
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(JacobiPreconditioner { inv_diag })
    }

    pub fn from_operator(op: &impl LinearOperator) -> Result<Self, SparseError> {
        Self::new(&op.diagonal())
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, &ri), &d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

/// Preconditioned conjugate gradients for a symmetric positive-definite `op`.
///
/// Starts from `x0` when given, zero otherwise. On success the returned
/// iterate satisfies `||b - op x|| <= tol ||b||` with the residual recomputed
/// from scratch, not the recursively updated one.
pub fn cg_solve(
    op: &impl LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let precond = match opts.preconditioner {
        Preconditioner::Jacobi => Some(JacobiPreconditioner::from_operator(op)?),
        Preconditioner::None => None,
    };
    cg_solve_preconditioned(op, b, x0, opts.tol, opts.max_iter, precond.as_ref())
}

/// [`cg_solve`] with a prebuilt preconditioner, so repeated solves with the
/// same operator can skip rebuilding it.
pub fn cg_solve_preconditioned(
    op: &impl LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    precond: Option<&JacobiPreconditioner>,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let n = op.dim();
    if b.len() != n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if let Some(x0) = x0 {
        if x0.len() != n {
            return Err(SparseError::DimensionMismatch {
                expected: n,
                got: x0.len(),
            });
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SparseError::NonFinite);
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                final_relative_residual: 0.0,
            },
        ));
    }

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];

    let true_residual = |x: &[f64], r: &mut [f64], q: &mut [f64]| {
        op.apply(x, q);
        for ((ri, &bi), &qi) in r.iter_mut().zip(b).zip(q.iter()) {
            *ri = bi - qi;
        }
        norm2(r) / b_norm
    };

    let mut rel = true_residual(&x, &mut r, &mut q);
    let mut iterations = 0;
    let precondition = |r: &[f64], z: &mut [f64]| match precond {
        Some(p) => p.apply(r, z),
        None => z.copy_from_slice(r),
    };

    // Outer loop restarts from the true residual if the recursive one drifted.
    while rel > tol {
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            if iterations >= max_iter {
                let residual = true_residual(&x, &mut r, &mut q);
                return Err(SparseError::NotConverged {
                    iterations,
                    residual,
                });
            }
            op.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                // Breakdown: either converged to rounding or the operator is not SPD.
                break;
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            iterations += 1;
            if norm2(&r) / b_norm <= tol {
                break;
            }
            precondition(&r, &mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let previous = rel;
        rel = true_residual(&x, &mut r, &mut q);
        if !rel.is_finite() {
            return Err(SparseError::NonFinite);
        }
        if rel > tol && rel >= previous {
            return Err(SparseError::NotConverged {
                iterations,
                residual: rel,
            });
        }
    }

    Ok((
        x,
        SolveStats {
            iterations,
            final_relative_residual: rel,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{CsrMatrix, DiagMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Cholesky solve, used only as an oracle.
    fn dense_cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    l[i][i] = (a[i][i] - s).sqrt();
                } else {
                    l[i][j] = (a[i][j] - s) / l[j][j];
                }
            }
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
            y[i] = (b[i] - s) / l[i][i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
            x[i] = (y[i] - s) / l[i][i];
        }
        x
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let (x, stats) = cg_solve(&CsrMatrix::identity(3), &b, None, &CgOptions::default()).unwrap();
        assert_eq!(x, b);
        assert!(stats.iterations <= 1);
    }

    #[test]
    fn diagonal_system() {
        let s = DiagMatrix::new(vec![4.0, 9.0]);
        for pc in [Preconditioner::Jacobi, Preconditioner::None] {
            let opts = CgOptions {
                preconditioner: pc,
                ..CgOptions::default()
            };
            let (x, _) = cg_solve(&s, &[4.0, 9.0], None, &opts).unwrap();
            assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs() {
        let (x, stats) = cg_solve(&CsrMatrix::identity(4), &[0.0; 4], None, &CgOptions::default()).unwrap();
        assert_eq!(x, vec![0.0; 4]);
        assert_eq!(stats.iterations, 0);
    }

    fn random_spd(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| if rng.gen_bool(0.3) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect())
            .collect();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &triplets).unwrap()
    }

    #[test]
    fn random_spd_matches_dense_cholesky() {
        for seed in 0..5 {
            let n = 30;
            let a = random_spd(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let expect = dense_cholesky_solve(&a.to_dense(), &b);
            let (x, stats) = cg_solve(&a, &b, None, &CgOptions::default()).unwrap();
            assert!(stats.iterations <= 5 * n);
            assert!(stats.final_relative_residual <= 1e-10);
            for i in 0..n {
                assert!((x[i] - expect[i]).abs() < 1e-9, "seed {seed} i {i}");
            }
        }
    }

    #[test]
    fn reports_non_convergence_with_residual() {
        let a = random_spd(30, 7);
        let b = vec![1.0; 30];
        let opts = CgOptions {
            max_iter: 2,
            ..CgOptions::default()
        };
        match cg_solve(&a, &b, None, &opts) {
            Err(SparseError::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        let a = CsrMatrix::identity(2);
        assert!(matches!(
            cg_solve(&a, &[1.0], None, &CgOptions::default()),
            Err(SparseError::DimensionMismatch { .. })
        ));
        assert_eq!(
            cg_solve(&a, &[f64::NAN, 1.0], None, &CgOptions::default()).unwrap_err(),
            SparseError::NonFinite
        );
        let bad = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(
            cg_solve(&bad, &[1.0, 1.0], None, &CgOptions::default()),
            Err(SparseError::NonPositiveDiagonal { row: 1, .. })
        ));
    }

    #[test]
    fn warm_start_at_solution_takes_no_iterations() {
        let a = random_spd(10, 3);
        let x_true: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b = a.matvec(&x_true).unwrap();
        let (x, _) = cg_solve(&a, &b, None, &CgOptions::default()).unwrap();
        let (_, stats) = cg_solve(&a, &b, Some(&x), &CgOptions::default()).unwrap();
        assert_eq!(stats.iterations, 0);
    }
}
