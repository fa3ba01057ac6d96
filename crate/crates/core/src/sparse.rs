//! Compressed-row sparse matrices with sorted column indices.
//!
//! The shift-and-sum recursions in this crate spend essentially all of their
//! time in `matvec`, so the storage is kept minimal and the accumulation
//! order fixed (row by row, columns ascending) to make repeated applications
//! bit-identical.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Square sparse matrix in CSR form. Column indices within a row are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets. Duplicate positions are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::NodeOutOfRange {
                    index: r.max(c),
                    nodes: n,
                });
            }
            per_row[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        indptr.push(0);
        for row in per_row.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    let k = vals.len() - 1;
                    vals[k] += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            indptr.push(cols.len());
        }
        Ok(CsrMatrix {
            n,
            indptr,
            cols,
            vals,
        })
    }

    /// Build from a dense matrix, keeping exact nonzeros.
    pub fn from_dense(a: &Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: c,
            });
        }
        let mut triplets = Vec::new();
        for i in 0..r {
            for j in 0..c {
                if a[[i, j]] != 0.0 {
                    triplets.push((i, j, a[[i, j]]));
                }
            }
        }
        Self::from_triplets(r, &triplets)
    }

    pub fn zero(n: usize) -> Self {
        CsrMatrix {
            n,
            indptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            indptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of row `i` as (col, value) pairs, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        self.cols[lo..hi]
            .iter()
            .copied()
            .zip(self.vals[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// y = A x with a fixed row-major accumulation order.
    pub fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = Array1::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^T x, scattering row contributions in index order.
    pub fn matvec_t(&self, x: ArrayView1<f64>) -> Array1<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = Array1::zeros(self.n);
        for i in 0..self.n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.cols[k]] += self.vals[k] * xi;
            }
        }
        y
    }

    /// Y = A M for a dense matrix of column signals.
    pub fn matmul(&self, m: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(m.nrows(), self.n);
        let cols = m.ncols();
        let mut y = Array2::zeros((self.n, cols));
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let v = self.vals[k];
                let src = self.cols[k];
                for c in 0..cols {
                    y[[i, c]] += v * m[[src, c]];
                }
            }
        }
        y
    }

    /// Y = A^T M.
    pub fn matmul_t(&self, m: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(m.nrows(), self.n);
        let cols = m.ncols();
        let mut y = Array2::zeros((self.n, cols));
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let v = self.vals[k];
                let dst = self.cols[k];
                for c in 0..cols {
                    y[[dst, c]] += v * m[[i, c]];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[[i, j]] = v;
            }
        }
        a
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                triplets.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.n, &triplets).expect("indices already validated")
    }

    /// max_{ij} |A_ij - A_ji|
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.vals.iter_mut() {
            *v *= factor;
        }
    }

    /// Gershgorin bounds: an interval certain to contain every (real) eigenvalue
    /// of a symmetric matrix.
    pub fn gershgorin_interval(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if self.n == 0 {
            return (0.0, 0.0);
        }
        for i in 0..self.n {
            let mut center = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    center = v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }

    pub fn is_finite(&self) -> bool {
        self.vals.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matvec_matches_dense() {
        let a = array![[1.0, 0.0, 2.0], [0.0, 0.0, 0.0], [3.0, -1.0, 0.5]];
        let s = CsrMatrix::from_dense(&a).unwrap();
        let x = array![1.0, 2.0, 3.0];
        let y = s.matvec(x.view());
        let want = a.dot(&x);
        for i in 0..3 {
            assert!((y[i] - want[i]).abs() < 1e-15);
        }
        let yt = s.matvec_t(x.view());
        let want_t = a.t().dot(&x);
        for i in 0..3 {
            assert!((yt[i] - want_t[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_triplets_sum() {
        let s = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.nnz(), 1);
    }

    #[test]
    fn gershgorin_contains_laplacian_spectrum() {
        // path graph laplacian: eigenvalues within [0, 4]
        let l = array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        let s = CsrMatrix::from_dense(&l).unwrap();
        let (lo, hi) = s.gershgorin_interval();
        assert!(lo <= 0.0 && hi >= 3.0);
    }

    #[test]
    fn asymmetry_detects_directed() {
        let s = CsrMatrix::from_triplets(2, &[(0, 1, 1.0)]).unwrap();
        assert!(s.asymmetry() == 1.0);
        let sym = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(sym.asymmetry(), 0.0);
    }
}
