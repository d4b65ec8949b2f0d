//! Compressed sparse row matrices for the channel operators.

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_start: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_start = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of range");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_start[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_start[r + 1] += row_start[r];
        }
        let mut m = SparseMatrix {
            rows,
            cols,
            row_start,
            col_idx,
            vals,
        };
        m.drop_zeros();
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    fn drop_zeros(&mut self) {
        let mut start = vec![0usize; self.rows + 1];
        let mut idx = Vec::with_capacity(self.col_idx.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.rows {
            for t in self.row_start[r]..self.row_start[r + 1] {
                if self.vals[t] != 0.0 {
                    idx.push(self.col_idx[t]);
                    vals.push(self.vals[t]);
                }
            }
            start[r + 1] = idx.len();
        }
        self.row_start = start;
        self.col_idx = idx;
        self.vals = vals;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries of row `r` as `(col, value)`, ordered by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_start[r]..self.row_start[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_start[r]..self.row_start[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Computes `Aᵀ y`.
    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let triplets = (0..self.rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v)))
            .collect();
        Self::from_triplets(self.cols, self.rows, triplets)
    }

    /// Computes the Gram matrix `AᵀA`.
    pub fn gram(&self) -> Self {
        let mut triplets = Vec::new();
        for r in 0..self.rows {
            let entries: Vec<(usize, f64)> = self.row(r).collect();
            for &(i, a) in &entries {
                for &(j, b) in &entries {
                    triplets.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.cols, self.cols, triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_zeros_vanish() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn gram_matches_dense_product() {
        let a = SparseMatrix::from_triplets(3, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (1, 1, -1.0), (2, 1, 3.0)]);
        let g = a.gram();
        let d = a.to_dense();
        for i in 0..2 {
            for j in 0..2 {
                let expect: f64 = (0..3).map(|k| d[k][i] * d[k][j]).sum();
                assert_eq!(g.get(i, j), expect);
            }
        }
        assert_eq!(a.transpose().transpose(), a);
    }
}
