use super::{norm2, CsrMatrix, SolveStats, SparseError};

/// Forward Gauss-Seidel sweeps for `S x = b`, starting from the contents of `x`.
///
/// When `S` has a positive diagonal and nonpositive off-diagonal entries,
/// each update is a nonnegative combination of `b_i` and the current iterate:
/// a nonnegative start and right-hand side keep every iterate nonnegative.
/// For `S = W + s A` with `A 1 = 0` and `b = W w` the update is a convex
/// combination of `w_i` and neighbouring values, so bounds shared by the start
/// and `w` are kept up to rounding. Converges for any
/// symmetric positive-definite `S`.
pub fn gauss_seidel_solve(
    s: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats, SparseError> {
    let n = s.n_rows();
    for len in [b.len(), x.len()] {
        if len != n {
            return Err(SparseError::DimensionMismatch { expected: n, got: len });
        }
    }
    if b.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(SparseError::NonFinite);
    }
    let diag = s.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(SparseError::NonPositiveDiagonal { row, value });
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let mut r = vec![0.0; n];
    let residual = |x: &[f64], r: &mut [f64]| {
        s.matvec_into(x, r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm2(r) / b_norm
    };
    let mut rel = residual(x, &mut r);
    let mut iterations = 0;
    while rel > tol {
        if iterations >= max_iter {
            return Err(SparseError::NotConverged {
                iterations,
                residual: rel,
            });
        }
        for i in 0..n {
            let (cols, vals) = s.row(i);
            let mut acc = b[i];
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i {
                    acc -= v * x[j];
                }
            }
            x[i] = acc / diag[i];
        }
        iterations += 1;
        rel = residual(x, &mut r);
        if !rel.is_finite() {
            return Err(SparseError::NonFinite);
        }
    }
    Ok(SolveStats {
        iterations,
        final_relative_residual: rel,
    })
}
