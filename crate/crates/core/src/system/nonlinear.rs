use crate::error::{check_dim, Error, Result};
use crate::kron::{contract_except, UnfoldingData};
use crate::sparse::{Scalar, SparseMatrix};

/// Default column cap for materialized unfoldings.
pub const DEFAULT_UNFOLDING_CAP: usize = 1_000_000;

/// `coefficient · (A_1 x ∘ … ∘ A_ξ x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HadamardTerm {
    pub coefficient: f64,
    pub factors: Vec<SparseMatrix>,
}

impl HadamardTerm {
    pub fn new(coefficient: f64, factors: Vec<SparseMatrix>) -> Result<Self> {
        let first = factors.first().ok_or(Error::InvalidDegree(0))?;
        let n = first.nrows();
        for f in &factors {
            check_dim("Hadamard factor rows", n, f.nrows())?;
            check_dim("Hadamard factor cols", n, f.ncols())?;
        }
        Ok(Self { coefficient, factors })
    }

    /// `coefficient · x∘…∘x` with identity factors.
    pub fn elementwise(coefficient: f64, n: usize, degree: usize) -> Self {
        Self {
            coefficient,
            factors: vec![SparseMatrix::identity(n); degree],
        }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn n(&self) -> usize {
        self.factors[0].nrows()
    }

    /// `c · (A_1 s_1 ∘ … ∘ A_ξ s_ξ)`, which equals the unfolding applied to
    /// `s_1 ⊗ … ⊗ s_ξ`.
    pub fn eval_slots<T: Scalar>(&self, slots: &[&[T]]) -> Vec<T> {
        let mut out = vec![T::from_real(self.coefficient); self.n()];
        for (f, s) in self.factors.iter().zip(slots) {
            let y = f.mul_vec(s);
            out.iter_mut().zip(&y).for_each(|(o, v)| *o *= *v);
        }
        out
    }

    /// Contraction of the output mode with `w` and all but the rightmost
    /// Kronecker slot with `slots`; the rightmost slot stays free.
    pub fn adjoint_last<T: Scalar>(&self, w: &[T], slots: &[&[T]]) -> Vec<T> {
        let xi = self.degree();
        let mut z: Vec<T> = w.iter().map(|&v| v.scale(self.coefficient)).collect();
        for (f, s) in self.factors[..xi - 1].iter().zip(slots) {
            let y = f.mul_vec(s);
            z.iter_mut().zip(&y).for_each(|(o, v)| *o *= *v);
        }
        self.factors[xi - 1].tmul_vec(&z)
    }

    pub(crate) fn jacobian_triplets(&self, x: &[f64], out: &mut Vec<(usize, usize, f64)>) {
        let ys: Vec<Vec<f64>> = self.factors.iter().map(|f| f.mul_vec(x)).collect();
        for (j, f) in self.factors.iter().enumerate() {
            let mut d = vec![self.coefficient; self.n()];
            for (l, y) in ys.iter().enumerate() {
                if l != j {
                    d.iter_mut().zip(y).for_each(|(o, v)| *o *= v);
                }
            }
            out.extend(f.triplets().map(|(r, c, v)| (r, c, d[r] * v)));
        }
    }

    /// Row `i` is `c · A_1(i,:) ⊗ … ⊗ A_ξ(i,:)`.
    pub fn explicit_unfolding(&self, cap: usize) -> Result<SparseMatrix> {
        let n = self.n();
        let xi = self.degree();
        let cols = n
            .checked_pow(xi as u32)
            .filter(|&c| c <= cap)
            .ok_or(Error::SizeCap {
                what: "explicit unfolding",
                needed: n.saturating_pow(xi as u32),
                cap,
            })?;
        let mut trip = Vec::new();
        for i in 0..n {
            let mut row: Vec<(usize, f64)> = vec![(0, self.coefficient)];
            for f in &self.factors {
                let (fc, fv) = f.row(i);
                let mut next = Vec::with_capacity(row.len() * fc.len());
                for &(j, v) in &row {
                    for (&c, &w) in fc.iter().zip(fv) {
                        next.push((j * n + c, v * w));
                    }
                }
                row = next;
            }
            trip.extend(row.into_iter().map(|(j, v)| (i, j, v)));
        }
        SparseMatrix::from_triplets(n, cols, trip)
    }
}

/// A tensor stored through its sparse mode-1 unfolding `n × n^ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitTensor {
    pub unfolding: SparseMatrix,
    degree: usize,
}

impl ExplicitTensor {
    pub fn new(unfolding: SparseMatrix, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegree(0));
        }
        let n = unfolding.nrows();
        check_dim("unfolding columns", n.pow(degree as u32), unfolding.ncols())?;
        Ok(Self { unfolding, degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n(&self) -> usize {
        self.unfolding.nrows()
    }

    fn data(&self) -> UnfoldingData {
        UnfoldingData::Sparse(self.unfolding.clone())
    }

    /// `M · (s_1 ⊗ … ⊗ s_ξ)`.
    pub fn eval_slots<T: Scalar>(&self, slots: &[&[T]]) -> Vec<T> {
        let n = self.n();
        let xi = self.degree;
        let mut out = vec![T::zero(); n];
        let mut digits = vec![0usize; xi];
        for (i, j, v) in self.unfolding.triplets() {
            decode_index(j, n, &mut digits);
            let mut acc = T::from_real(v);
            for (s, &d) in slots.iter().zip(&digits) {
                acc *= s[d];
            }
            out[i] += acc;
        }
        out
    }

    /// `M_(2) (s_1 ⊗ … ⊗ s_{ξ−1} ⊗ w)`: contracts the output mode with `w`
    /// and leaves the rightmost Kronecker slot free.
    pub fn adjoint_last<T: Scalar>(&self, w: &[T], slots: &[&[T]]) -> Vec<T> {
        let n = self.n();
        let xi = self.degree;
        let mut out = vec![T::zero(); n];
        let mut digits = vec![0usize; xi];
        for (i, j, v) in self.unfolding.triplets() {
            decode_index(j, n, &mut digits);
            let mut acc = w[i].scale(v);
            for (s, &d) in slots.iter().zip(&digits[..xi - 1]) {
                acc *= s[d];
            }
            out[digits[xi - 1]] += acc;
        }
        out
    }

    /// Same as [`Self::adjoint_last`] but routed through the generic mode
    /// contraction; kept for cross-checking.
    pub fn adjoint_last_via_modes<T: Scalar>(&self, w: &[T], slots: &[&[T]]) -> Result<Vec<T>> {
        let xi = self.degree;
        let dims = vec![self.n(); xi + 1];
        let mut vectors: Vec<Option<&[T]>> = vec![Some(w), None];
        for k in 2..=xi {
            vectors.push(Some(slots[xi - k]));
        }
        contract_except(&self.data(), &dims, &vectors, 1)
    }

    pub(crate) fn jacobian_triplets(&self, x: &[f64], scale: f64, out: &mut Vec<(usize, usize, f64)>) {
        let n = self.n();
        let xi = self.degree;
        let mut digits = vec![0usize; xi];
        for (i, j, v) in self.unfolding.triplets() {
            decode_index(j, n, &mut digits);
            for s in 0..xi {
                let mut acc = v * scale;
                for (t, &d) in digits.iter().enumerate() {
                    if t != s {
                        acc *= x[d];
                    }
                }
                out.push((i, digits[s], acc));
            }
        }
    }
}

/// Splits a Kronecker column index into per-slot indices, leftmost slot
/// first (most significant digit).
pub fn decode_index(mut j: usize, n: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = j % n;
        j /= n;
    }
}

/// A degree-ξ state nonlinearity `H_ξ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    Hadamard(Vec<HadamardTerm>),
    Explicit(ExplicitTensor),
}

impl Nonlinearity {
    pub fn degree(&self) -> usize {
        match self {
            Self::Hadamard(terms) => terms[0].degree(),
            Self::Explicit(t) => t.degree(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Hadamard(terms) => terms[0].n(),
            Self::Explicit(t) => t.n(),
        }
    }

    pub(crate) fn validate(&self, n: usize, degree: usize) -> Result<()> {
        match self {
            Self::Hadamard(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidArgument("empty Hadamard term list".into()));
                }
                for t in terms {
                    check_dim("Hadamard term degree", degree, t.degree())?;
                    check_dim("Hadamard term dimension", n, t.n())?;
                }
            }
            Self::Explicit(t) => {
                check_dim("unfolding degree", degree, t.degree())?;
                check_dim("unfolding rows", n, t.n())?;
            }
        }
        Ok(())
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let slots = vec![x; self.degree()];
        self.eval_slots(&slots)
    }

    /// `H (s_1 ⊗ … ⊗ s_ξ)`.
    pub fn eval_slots<T: Scalar>(&self, slots: &[&[T]]) -> Vec<T> {
        match self {
            Self::Hadamard(terms) => {
                let mut out = vec![T::zero(); self.n()];
                for t in terms {
                    let y = t.eval_slots(slots);
                    out.iter_mut().zip(&y).for_each(|(o, v)| *o += *v);
                }
                out
            }
            Self::Explicit(t) => t.eval_slots(slots),
        }
    }

    /// `H_(2) (s_1 ⊗ … ⊗ s_{ξ−1} ⊗ w)`.
    pub fn adjoint_last<T: Scalar>(&self, w: &[T], slots: &[&[T]]) -> Vec<T> {
        match self {
            Self::Hadamard(terms) => {
                let mut out = vec![T::zero(); self.n()];
                for t in terms {
                    let y = t.adjoint_last(w, slots);
                    out.iter_mut().zip(&y).for_each(|(o, v)| *o += *v);
                }
                out
            }
            Self::Explicit(t) => t.adjoint_last(w, slots),
        }
    }

    pub(crate) fn jacobian_triplets(&self, x: &[f64], out: &mut Vec<(usize, usize, f64)>) {
        match self {
            Self::Hadamard(terms) => terms.iter().for_each(|t| t.jacobian_triplets(x, out)),
            Self::Explicit(t) => t.jacobian_triplets(x, 1.0, out),
        }
    }

    pub fn explicit_unfolding(&self, cap: usize) -> Result<SparseMatrix> {
        match self {
            Self::Hadamard(terms) => {
                let mut acc = terms[0].explicit_unfolding(cap)?;
                for t in &terms[1..] {
                    acc = acc.add(&t.explicit_unfolding(cap)?)?;
                }
                Ok(acc)
            }
            Self::Explicit(t) => Ok(t.unfolding.clone()),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        match self {
            Self::Hadamard(terms) => Self::Hadamard(
                terms
                    .iter()
                    .map(|t| HadamardTerm {
                        coefficient: t.coefficient * alpha,
                        factors: t.factors.clone(),
                    })
                    .collect(),
            ),
            Self::Explicit(t) => Self::Explicit(ExplicitTensor {
                unfolding: t.unfolding.scaled(alpha),
                degree: t.degree,
            }),
        }
    }
}

/// A bilinear term `N_η (u ⊗ x^{⊗η})`, stored `n × (m·n^η)` with the input
/// index leftmost. Slice `l` is the `n × n^η` block multiplying `u_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputTerm {
    pub matrix: SparseMatrix,
    slices: Vec<ExplicitTensor>,
}

impl InputTerm {
    pub fn new(matrix: SparseMatrix, m: usize, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegree(0));
        }
        let n = matrix.nrows();
        let block = n.pow(degree as u32);
        check_dim("input term columns", m * block, matrix.ncols())?;
        let slices = (0..m)
            .map(|l| ExplicitTensor::new(matrix.column_slice(l * block, (l + 1) * block), degree))
            .collect::<Result<_>>()?;
        Ok(Self { matrix, slices })
    }

    pub fn degree(&self) -> usize {
        self.slices[0].degree()
    }

    pub fn inputs(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, l: usize) -> &ExplicitTensor {
        &self.slices[l]
    }

    pub fn eval<T: Scalar>(&self, u: &[f64], x: &[T]) -> Vec<T> {
        let slots = vec![x; self.degree()];
        let mut out = vec![T::zero(); self.matrix.nrows()];
        for (l, &ul) in u.iter().enumerate() {
            if ul != 0.0 {
                let y = self.slices[l].eval_slots(&slots);
                out.iter_mut().zip(&y).for_each(|(o, v)| *o += v.scale(ul));
            }
        }
        out
    }

    pub(crate) fn jacobian_triplets(&self, u: &[f64], x: &[f64], out: &mut Vec<(usize, usize, f64)>) {
        for (l, &ul) in u.iter().enumerate() {
            if ul != 0.0 {
                self.slices[l].jacobian_triplets(x, ul, out);
            }
        }
    }
}
