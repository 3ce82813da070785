//! Kronecker powers, row-wise Kronecker products and tensor unfoldings.
//!
//! Convention: in `a_N ⊗ … ⊗ a_2` the rightmost factor runs fastest and
//! corresponds to the lowest tensor mode. Unfoldings use the column index
//! `j = Σ_{k≠n} i_k J_k` (0-based) with `J_k = Π_{m<k, m≠n} I_m`.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::sparse::{Scalar, SparseMatrix};

/// `a ⊗ b` for vectors.
pub fn kron_vec<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// `v ⊗ … ⊗ v` (ξ factors).
pub fn kron_pow<T: Scalar>(v: &[T], xi: usize) -> Result<Vec<T>> {
    if xi == 0 {
        return Err(Error::InvalidDegree(0));
    }
    let mut out = v.to_vec();
    for _ in 1..xi {
        out = kron_vec(&out, v);
    }
    Ok(out)
}

/// Kronecker product of a list of vectors, leftmost first.
pub fn kron_all<T: Scalar>(vs: &[&[T]]) -> Vec<T> {
    let mut out = vec![T::one()];
    for v in vs {
        out = kron_vec(&out, v);
    }
    out
}

/// Dense matrix Kronecker product.
pub fn kron_mat<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Row-wise Kronecker (face-splitting) product: row `i` is
/// `F_1(i,:) ⊗ … ⊗ F_ξ(i,:)`.
pub fn row_kron<T: Scalar>(factors: &[&DMatrix<T>]) -> Result<DMatrix<T>> {
    let first = factors.first().ok_or(Error::InvalidDegree(0))?;
    let n = first.nrows();
    for f in factors {
        check_dim("row_kron factor rows", n, f.nrows())?;
    }
    if factors.len() == 1 {
        return Ok((*first).clone());
    }
    let width: usize = factors.iter().map(|f| f.ncols()).product();
    let mut out = DMatrix::zeros(n, width);
    let mut row = Vec::with_capacity(width);
    let mut next = Vec::with_capacity(width);
    for i in 0..n {
        row.clear();
        row.push(T::one());
        for f in factors {
            next.clear();
            for &x in &row {
                for c in 0..f.ncols() {
                    next.push(x * f[(i, c)]);
                }
            }
            std::mem::swap(&mut row, &mut next);
        }
        for (j, &v) in row.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum UnfoldingData {
    Dense(DMatrix<f64>),
    Sparse(SparseMatrix),
}

impl UnfoldingData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Dense(d) => d.shape(),
            Self::Sparse(s) => s.shape(),
        }
    }

    fn entries(&self) -> Vec<(usize, usize, f64)> {
        match self {
            Self::Dense(d) => (0..d.ncols())
                .flat_map(|j| (0..d.nrows()).map(move |i| (i, j)))
                .filter_map(|(i, j)| {
                    let v = d[(i, j)];
                    (v != 0.0).then_some((i, j, v))
                })
                .collect(),
            Self::Sparse(s) => s.triplets().collect(),
        }
    }
}

/// Index map between two unfoldings of one tensor, derived from its dims.
#[derive(Clone, Debug)]
pub struct ModePermutation {
    dims: Vec<usize>,
    from: usize,
    to: usize,
    from_strides: Vec<usize>,
    to_strides: Vec<usize>,
}

fn unfold_strides(dims: &[usize], mode: usize) -> Vec<usize> {
    let mut strides = vec![0; dims.len()];
    let mut acc = 1;
    for (k, &d) in dims.iter().enumerate() {
        if k != mode {
            strides[k] = acc;
            acc *= d;
        }
    }
    strides
}

impl ModePermutation {
    /// `from` and `to` are 0-based mode indices.
    pub fn new(dims: &[usize], from: usize, to: usize) -> Result<Self> {
        if from >= dims.len() || to >= dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode out of range for a {}-way tensor",
                dims.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            from,
            to,
            from_strides: unfold_strides(dims, from),
            to_strides: unfold_strides(dims, to),
        })
    }

    /// Maps a `(row, col)` position in the source unfolding to the target.
    pub fn map(&self, row: usize, col: usize) -> (usize, usize) {
        let mut idx = vec![0; self.dims.len()];
        idx[self.from] = row;
        let mut rest = col;
        for k in 0..self.dims.len() {
            if k != self.from {
                idx[k] = rest % self.dims[k];
                rest /= self.dims[k];
            }
        }
        let new_col = (0..self.dims.len())
            .filter(|&k| k != self.to)
            .map(|k| idx[k] * self.to_strides[k])
            .sum();
        (idx[self.to], new_col)
    }

    pub fn inverse(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            from: self.to,
            to: self.from,
            from_strides: self.to_strides.clone(),
            to_strides: self.from_strides.clone(),
        }
    }
}

/// A matricized tensor. `mode` is 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnfolding {
    pub data: UnfoldingData,
    pub tensor_dims: Vec<usize>,
    pub mode: usize,
}

impl ModeUnfolding {
    pub fn new(data: UnfoldingData, tensor_dims: Vec<usize>, mode: usize) -> Result<Self> {
        if mode == 0 || mode > tensor_dims.len() {
            return Err(Error::InvalidArgument(format!("invalid unfolding mode {mode}")));
        }
        let (r, c) = data.shape();
        check_dim("unfolding rows", tensor_dims[mode - 1], r)?;
        let cols: usize = tensor_dims
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != mode - 1)
            .map(|(_, &d)| d)
            .product();
        check_dim("unfolding columns", cols, c)?;
        Ok(Self {
            data,
            tensor_dims,
            mode,
        })
    }

    /// Cubical `(ξ+1)`-way tensor from its mode-1 unfolding `n × n^ξ`.
    pub fn from_mode1_sparse(m: SparseMatrix, xi: usize) -> Result<Self> {
        let n = m.nrows();
        Self::new(UnfoldingData::Sparse(m), vec![n; xi + 1], 1)
    }

    /// Unfolding of the same tensor along `target` (1-based). Pure index
    /// permutation; values are copied unchanged.
    pub fn to_mode(&self, target: usize) -> Result<Self> {
        if target == 0 || target > self.tensor_dims.len() {
            return Err(Error::InvalidArgument(format!("invalid unfolding mode {target}")));
        }
        let perm = ModePermutation::new(&self.tensor_dims, self.mode - 1, target - 1)?;
        self.apply(&perm, target)
    }

    fn apply(&self, perm: &ModePermutation, target: usize) -> Result<Self> {
        let rows = self.tensor_dims[target - 1];
        let total: usize = self.tensor_dims.iter().product();
        let cols = if rows == 0 { 0 } else { total / rows };
        let trip = self.data.entries().into_iter().map(|(i, j, v)| {
            let (a, b) = perm.map(i, j);
            (a, b, v)
        });
        let data = match &self.data {
            UnfoldingData::Dense(_) => {
                let mut d = DMatrix::zeros(rows, cols);
                for (i, j, v) in trip {
                    d[(i, j)] = v;
                }
                UnfoldingData::Dense(d)
            }
            UnfoldingData::Sparse(_) => UnfoldingData::Sparse(SparseMatrix::from_triplets(rows, cols, trip)?),
        };
        Ok(Self {
            data,
            tensor_dims: self.tensor_dims.clone(),
            mode: target,
        })
    }

    pub fn mode2_from_mode1(&self) -> Result<Self> {
        if self.mode != 1 {
            return Err(Error::InvalidArgument("expected a mode-1 unfolding".into()));
        }
        self.to_mode(2)
    }

    pub fn mode1_from_mode2(&self) -> Result<Self> {
        if self.mode != 2 {
            return Err(Error::InvalidArgument("expected a mode-2 unfolding".into()));
        }
        self.to_mode(1)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.data {
            UnfoldingData::Dense(d) => d.clone(),
            UnfoldingData::Sparse(s) => s.to_dense(),
        }
    }
}

/// Contracts a mode-1 unfolding with vectors for modes 2..N, returning
/// `M·(a_N ⊗ … ⊗ a_2)` without forming the Kronecker vector.
pub fn contract_vectors<T: Scalar>(m: &ModeUnfolding, vectors: &[&[T]]) -> Result<Vec<T>> {
    if m.mode != 1 {
        return Err(Error::InvalidArgument("contract_vectors needs a mode-1 unfolding".into()));
    }
    check_dim("contracted vector count", m.tensor_dims.len() - 1, vectors.len())?;
    let mut all: Vec<Option<&[T]>> = vec![None];
    all.extend(vectors.iter().map(|v| Some(*v)));
    contract_except(&m.data, &m.tensor_dims, &all, 0)
}

/// Contracts every mode except `free` (0-based) of the tensor whose mode-1
/// unfolding is `data`. `vectors[k]` is the vector for mode `k`; the entry
/// for `free` is ignored. The result has length `dims[free]`.
pub fn contract_except<T: Scalar>(
    data: &UnfoldingData,
    dims: &[usize],
    vectors: &[Option<&[T]>],
    free: usize,
) -> Result<Vec<T>> {
    check_dim("contraction vector slots", dims.len(), vectors.len())?;
    for (k, v) in vectors.iter().enumerate() {
        if k == free {
            continue;
        }
        let v = v.ok_or_else(|| Error::InvalidArgument(format!("missing vector for mode {}", k + 1)))?;
        check_dim("contraction vector length", dims[k], v.len())?;
    }
    let mut out = vec![T::zero(); dims[free]];
    let mut idx = vec![0usize; dims.len()];
    let mut visit = |i: usize, j: usize, val: f64| {
        idx[0] = i;
        let mut rest = j;
        for k in 1..dims.len() {
            idx[k] = rest % dims[k];
            rest /= dims[k];
        }
        let mut acc = T::from_real(val);
        for (k, v) in vectors.iter().enumerate() {
            if k != free {
                acc *= v.expect("checked above")[idx[k]];
            }
        }
        out[idx[free]] += acc;
    };
    match data {
        UnfoldingData::Sparse(s) => s.triplets().for_each(|(i, j, v)| visit(i, j, v)),
        UnfoldingData::Dense(d) => {
            for j in 0..d.ncols() {
                for i in 0..d.nrows() {
                    let v = d[(i, j)];
                    if v != 0.0 {
                        visit(i, j, v);
                    }
                }
            }
        }
    }
    Ok(out)
}
