use serde::{Deserialize, Serialize};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped. Panics on out-of-range indices.
    pub fn from_triplets(rows: usize, cols: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut t: Vec<(usize, usize, f64)> = trip.to_vec();
        for &(i, j, _) in &t {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) out of range");
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut m = SparseMatrix::zeros(rows, cols);
        let mut counts = vec![0usize; rows];
        let mut k = 0;
        while k < t.len() {
            let (i, j, mut v) = t[k];
            k += 1;
            while k < t.len() && t[k].0 == i && t[k].1 == j {
                v += t[k].2;
                k += 1;
            }
            if v != 0.0 {
                m.col_idx.push(j);
                m.vals.push(v);
                counts[i] += 1;
            }
        }
        for i in 0..rows {
            m.row_ptr[i + 1] = m.row_ptr[i] + counts[i];
        }
        m
    }

    pub fn from_dense(rows: &[Vec<f64>], cols: usize) -> Self {
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged dense matrix");
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), cols, &trip)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzeros `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            out.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (j, v) in self.row(i) {
                    out[j] += v * yi;
                }
            }
        }
        out
    }

    /// `sum_k z[k] * A[offset + k, :]` as a dense row.
    pub fn combine_rows(&self, offset: usize, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (k, &zk) in z.iter().enumerate() {
            if zk != 0.0 {
                for (j, v) in self.row(offset + k) {
                    out[j] += v * zk;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    /// Replaces rows `start..start + len` with the given sparse rows.
    pub(crate) fn with_rows_replaced(&self, start: usize, len: usize, new_rows: &[Vec<(usize, f64)>]) -> Self {
        assert_eq!(new_rows.len(), len);
        let mut trip = Vec::with_capacity(self.nnz());
        for (i, j, v) in self.triplets() {
            if i < start || i >= start + len {
                trip.push((i, j, v));
            }
        }
        for (k, row) in new_rows.iter().enumerate() {
            for &(j, v) in row {
                trip.push((start + k, j, v));
            }
        }
        SparseMatrix::from_triplets(self.rows, self.cols, &trip)
    }

    /// Permutes columns: new column `k` is old column `order[k]`.
    pub fn permute_cols(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.cols);
        let mut inv = vec![0; self.cols];
        for (k, &o) in order.iter().enumerate() {
            inv[o] = k;
        }
        let trip: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, inv[j], v)).collect();
        SparseMatrix::from_triplets(self.rows, self.cols, &trip)
    }
}
