//! Compressed sparse row storage for the large system matrices.
//!
//! Only the operations the reduction pipeline needs are provided: products
//! with dense vectors and matrices (real or complex), transposition, row
//! selection, affine combinations and conversion to the sparse LU backend.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};

/// Scalar fields the library computes over: `f64` and `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        indptr.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                indices.push(i);
                values.push(d);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            values,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == j {
                    acc += row[k].1;
                    k += 1;
                }
                if acc != 0.0 {
                    indices.push(j);
                    values.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let trip = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, m[(i, j)]));
        Self::from_triplets(m.nrows(), m.ncols(), trip).expect("indices within bounds")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.nrows == self.ncols
            && self.nnz() == self.nrows
            && self.triplets().all(|(i, j, v)| i == j && v == 1.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i == j)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = self * x`.
    pub fn mul_vec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                acc += x[j].scale(v);
            }
            *yi = acc;
        }
    }

    /// `y = self^T * x`.
    pub fn tmul_vec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += xi.scale(v);
            }
        }
        y
    }

    pub fn mul_dense<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.ncols, "sparse * dense shape mismatch");
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for i in 0..self.nrows {
                let (cols, vals) = self.row(i);
                let mut acc = T::zero();
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += col[j].scale(v);
                }
                y[(i, c)] = acc;
            }
        }
        y
    }

    /// `self^T * x` without forming the transpose.
    pub fn tmul_dense<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.nrows, "sparse^T * dense shape mismatch");
        let mut y = DMatrix::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let xi = x[(i, c)];
                let (cols, vals) = self.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    y[(j, c)] += xi.scale(v);
                }
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)))
            .expect("transposed indices within bounds")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        if alpha == 0.0 {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Scales row `i` by `d[i]`, i.e. `diag(d) * self`.
    pub fn row_scaled(&self, d: &[f64]) -> Self {
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().map(|(i, j, v)| (i, j, v * d[i])),
        )
        .expect("indices within bounds")
    }

    /// `Σ αᵢ Mᵢ` over matrices of identical shape. The sparsity pattern is
    /// the union of the terms' patterns.
    pub fn lin_comb(nrows: usize, ncols: usize, terms: &[(f64, &SparseMatrix)]) -> Result<Self> {
        for (_, m) in terms {
            check_dim("linear combination rows", nrows, m.nrows)?;
            check_dim("linear combination cols", ncols, m.ncols)?;
        }
        Self::from_triplets(
            nrows,
            ncols,
            terms
                .iter()
                .flat_map(|(alpha, m)| m.triplets().map(move |(i, j, v)| (i, j, alpha * v))),
        )
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<Self> {
        Self::lin_comb(self.nrows, self.ncols, &[(1.0, self), (1.0, other)])
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_slice(&self, start: usize, end: usize) -> Self {
        Self::from_triplets(
            self.nrows,
            end - start,
            self.triplets()
                .filter(|&(_, j, _)| j >= start && j < end)
                .map(|(i, j, v)| (i, j - start, v)),
        )
        .expect("indices within bounds")
    }

    /// Rows listed in `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let trip = rows.iter().enumerate().flat_map(|(k, &i)| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (k, j, v))
        });
        Self::from_triplets(rows.len(), self.ncols, trip).expect("indices within bounds")
    }

    /// Embeds the matrix into a larger zero matrix at offset `(r0, c0)`.
    pub fn embed(&self, nrows: usize, ncols: usize, r0: usize, c0: usize) -> Result<Self> {
        if r0 + self.nrows > nrows || c0 + self.ncols > ncols {
            return Err(Error::InvalidArgument("embedding exceeds target shape".into()));
        }
        Self::from_triplets(nrows, ncols, self.triplets().map(|(i, j, v)| (i + r0, j + c0, v)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
