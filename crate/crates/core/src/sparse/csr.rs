use std::fmt::Write as _;

use super::{LinearOperator, SparseError};

/// Compressed sparse row matrix with strictly increasing column indices in
/// every row. Symmetric matrices are stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Duplicates are summed in input order, so the result is bitwise
    /// reproducible for a fixed triplet sequence.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(SparseError::OutOfBounds {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        // Bucket by row, keeping input order within a row.
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for r in 0..n_rows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                if col_indices.len() > row_offsets[r] && *col_indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Stored value at `(i, j)`, zero when the entry is structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.n_cols {
            return Err(SparseError::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond the slice bounds.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = 0.0;
            for k in start..end {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` over stored entries; infinite for non-square matrices.
    pub fn symmetry_defect(&self) -> f64 {
        if self.n_rows != self.n_cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `alpha * self + beta * other` over the union of both sparsity patterns.
    pub fn linear_combination(
        &self,
        alpha: f64,
        other: &CsrMatrix,
        beta: f64,
    ) -> Result<CsrMatrix, SparseError> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(SparseError::DimensionMismatch {
                expected: self.n_rows,
                got: other.n_rows,
            });
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(col_indices.capacity());
        row_offsets.push(0);
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] <= cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] <= ca[p]);
                match (take_a, take_b) {
                    (true, true) => {
                        col_indices.push(ca[p]);
                        values.push(alpha * va[p] + beta * vb[q]);
                        p += 1;
                        q += 1;
                    }
                    (true, false) => {
                        col_indices.push(ca[p]);
                        values.push(alpha * va[p]);
                        p += 1;
                    }
                    _ => {
                        col_indices.push(cb[q]);
                        values.push(beta * vb[q]);
                        q += 1;
                    }
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// `diag(d) + scale * self`.
    pub fn shifted(&self, d: &[f64], scale: f64) -> Result<CsrMatrix, SparseError> {
        if d.len() != self.n_rows || self.n_rows != self.n_cols {
            return Err(SparseError::DimensionMismatch {
                expected: self.n_rows,
                got: d.len(),
            });
        }
        let diag = CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets: (0..=self.n_rows).collect(),
            col_indices: (0..self.n_rows).collect(),
            values: d.to_vec(),
        };
        diag.linear_combination(1.0, self, scale)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in dense.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        dense
    }

    /// ASCII dump, one `row col value` line per stored entry.
    pub fn to_triplet_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{i} {j} {v:.17e}");
            }
        }
        out
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }

    fn diagonal(&self) -> Vec<f64> {
        CsrMatrix::diagonal(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_matvec() {
        let x = vec![3.0, -1.0, 2.5];
        assert_eq!(CsrMatrix::identity(3).matvec(&x).unwrap(), x);
    }

    #[test]
    fn diagonal_matvec() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 1.0), (0, 2, 0.5)]).unwrap();
        assert_eq!(a.row(0), (&[0usize, 2][..], &[1.0, 1.5][..]));
        assert_eq!(a.row(1).0.len(), 0);
    }

    #[test]
    fn dimension_errors() {
        let a = CsrMatrix::identity(3);
        assert_eq!(
            a.matvec(&[1.0]),
            Err(SparseError::DimensionMismatch {
                expected: 3,
                got: 1
            })
        );
        assert!(matches!(
            CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(SparseError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn triplet_dump() {
        let a = CsrMatrix::from_triplets(2, 2, &[(1, 0, -0.5)]).unwrap();
        let dump = a.to_triplet_string();
        let fields: Vec<&str> = dump.split_whitespace().collect();
        assert_eq!(fields[..2], ["1", "0"]);
        assert_eq!(fields[2].parse::<f64>().unwrap(), -0.5);
    }

    #[test]
    fn shifted_adds_diagonal() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let s = a.shifted(&[2.0, 3.0], 0.5).unwrap();
        assert_eq!(s.to_dense(), vec![vec![2.0, 0.5], vec![0.5, 3.0]]);
    }

    fn sparse_matrix(n: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
        prop::collection::vec((0..n, 0..n, -10.0f64..10.0), 0..(3 * n))
    }

    proptest! {
        #[test]
        fn matvec_matches_dense(
            n in 1usize..50,
            seed_entries in sparse_matrix(50),
            x in prop::collection::vec(-5.0f64..5.0, 50),
        ) {
            let entries: Vec<_> = seed_entries.into_iter().map(|(i, j, v)| (i % n, j % n, v)).collect();
            let a = CsrMatrix::from_triplets(n, n, &entries).unwrap();
            let mut dense = vec![vec![0.0; n]; n];
            for &(i, j, v) in &entries {
                dense[i][j] += v;
            }
            let y = a.matvec(&x[..n]).unwrap();
            for i in 0..n {
                let expect: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
                let scale: f64 = (0..n).map(|j| (dense[i][j] * x[j]).abs()).sum();
                prop_assert!((y[i] - expect).abs() <= 1e-13 * scale.max(1.0));
            }
        }

        #[test]
        fn linear_combination_matches_dense(
            a in sparse_matrix(8),
            b in sparse_matrix(8),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let ma = CsrMatrix::from_triplets(8, 8, &a).unwrap();
            let mb = CsrMatrix::from_triplets(8, 8, &b).unwrap();
            let c = ma.linear_combination(alpha, &mb, beta).unwrap();
            let (da, db, dc) = (ma.to_dense(), mb.to_dense(), c.to_dense());
            for i in 0..8 {
                for j in 0..8 {
                    prop_assert!((dc[i][j] - (alpha * da[i][j] + beta * db[i][j])).abs() < 1e-12);
                }
            }
        }
    }
}
