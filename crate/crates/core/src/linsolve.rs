//! Sparse LU factorizations and the shifted-pencil factorization cache.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::{Scalar, SparseMatrix};

/// Scalars supported by the sparse LU backend.
pub trait LuScalar: Scalar + faer::traits::ComplexField {}

impl LuScalar for f64 {}
impl LuScalar for Complex64 {}

pub struct SparseLu<T: LuScalar> {
    n: usize,
    lu: Lu<usize, T>,
}

impl<T: LuScalar> std::fmt::Debug for SparseLu<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl<T: LuScalar> SparseLu<T> {
    /// Factors the square matrix given by triplets (duplicates summed).
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let trip: Vec<Triplet<usize, usize, T>> = triplets
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let mat = SparseColMat::<usize, T>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::SingularMatrix(format!("invalid sparse structure: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::SingularMatrix(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { n, lu })
    }

    pub fn factor(m: &SparseMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "square factorization",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let trip: Vec<_> = m.triplets().map(|(i, j, v)| (i, j, T::from_real(v))).collect();
        Self::from_triplets(m.nrows(), &trip)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M X = rhs`.
    pub fn solve(&self, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.solve_impl(rhs, false)
    }

    /// Solves `Mᵀ X = rhs` (plain transpose, no conjugation).
    pub fn solve_transpose(&self, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.solve_impl(rhs, true)
    }

    pub fn solve_vec(&self, rhs: &[T]) -> Result<Vec<T>> {
        let m = DMatrix::from_column_slice(rhs.len(), 1, rhs);
        Ok(self.solve(&m)?.as_slice().to_vec())
    }

    pub fn solve_transpose_vec(&self, rhs: &[T]) -> Result<Vec<T>> {
        let m = DMatrix::from_column_slice(rhs.len(), 1, rhs);
        Ok(self.solve_transpose(&m)?.as_slice().to_vec())
    }

    fn solve_impl(&self, rhs: &DMatrix<T>, transpose: bool) -> Result<DMatrix<T>> {
        if rhs.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                context: "LU right-hand side",
                expected: self.n,
                got: rhs.nrows(),
            });
        }
        let mut x = Mat::<T>::from_fn(rhs.nrows(), rhs.ncols(), |i, j| rhs[(i, j)]);
        if transpose {
            self.lu.solve_transpose_in_place(x.as_mut());
        } else {
            self.lu.solve_in_place(x.as_mut());
        }
        let out = DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |i, j| x[(i, j)]);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix("non-finite solution; matrix is numerically singular".into()));
        }
        Ok(out)
    }
}

/// Factors `sE − A` in complex arithmetic.
pub fn factor_pencil(e: &SparseMatrix, a: &SparseMatrix, s: Complex64) -> Result<SparseLu<Complex64>> {
    let n = a.nrows();
    let mut trip: Vec<(usize, usize, Complex64)> = Vec::with_capacity(e.nnz() + a.nnz());
    trip.extend(e.triplets().map(|(i, j, v)| (i, j, s * v)));
    trip.extend(a.triplets().map(|(i, j, v)| (i, j, Complex64::new(-v, 0.0))));
    SparseLu::from_triplets(n, &trip).map_err(|_| Error::SingularPencil { s, point: None })
}

type CacheKey = (u64, u64, Vec<u64>);

/// LRU cache of shifted-pencil factorizations keyed by the shift (and an
/// optional parameter vector). Safe to share between threads.
pub struct PencilCache {
    budget: usize,
    entries: Mutex<VecDeque<(CacheKey, Arc<SparseLu<Complex64>>)>>,
}

impl Default for PencilCache {
    fn default() -> Self {
        Self::new(32)
    }
}

impl PencilCache {
    pub fn new(budget: usize) -> Self {
        Self {
            budget: budget.max(1),
            entries: Mutex::new(VecDeque::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the cached factorization for `(s, p)`, computing it with
    /// `make` on a miss.
    pub fn get_or_factor<F>(&self, s: Complex64, p: &[f64], make: F) -> Result<Arc<SparseLu<Complex64>>>
    where
        F: FnOnce() -> Result<SparseLu<Complex64>>,
    {
        let key: CacheKey = (s.re.to_bits(), s.im.to_bits(), p.iter().map(|v| v.to_bits()).collect());
        {
            let mut entries = self.entries.lock().expect("cache lock");
            if let Some(pos) = entries.iter().position(|(k, _)| *k == key) {
                let entry = entries.remove(pos).expect("position valid");
                let lu = entry.1.clone();
                entries.push_back(entry);
                return Ok(lu);
            }
        }
        let lu = Arc::new(make()?);
        let mut entries = self.entries.lock().expect("cache lock");
        if !entries.iter().any(|(k, _)| *k == key) {
            entries.push_back((key, lu.clone()));
            while entries.len() > self.budget {
                entries.pop_front();
            }
        }
        Ok(lu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_solve_and_transpose() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 0, 2.0), (0, 1, 1.0), (1, 1, 4.0)]).unwrap();
        let lu = SparseLu::<f64>::factor(&m).unwrap();
        let x = lu.solve_vec(&[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let y = lu.solve_transpose_vec(&[2.0, 5.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_pencil() {
        let e = SparseMatrix::identity(1);
        let a = SparseMatrix::from_diagonal(&[-1.0]);
        let lu = factor_pencil(&e, &a, Complex64::new(1.0, 0.0)).unwrap();
        let x = lu.solve_vec(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((x[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_pencil_detected() {
        let e = SparseMatrix::identity(2);
        let a = SparseMatrix::identity(2);
        let res = factor_pencil(&e, &a, Complex64::new(1.0, 0.0))
            .and_then(|lu| lu.solve_vec(&[Complex64::new(1.0, 0.0); 2]));
        assert!(res.is_err());
    }

    #[test]
    fn cache_evicts_least_recent() {
        let e = SparseMatrix::identity(1);
        let a = SparseMatrix::from_diagonal(&[-1.0]);
        let cache = PencilCache::new(2);
        for s in [1.0, 2.0, 3.0] {
            cache
                .get_or_factor(Complex64::new(s, 0.0), &[], || factor_pencil(&e, &a, Complex64::new(s, 0.0)))
                .unwrap();
        }
        assert_eq!(cache.len(), 2);
    }
}
