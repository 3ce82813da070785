//! Generalized transfer functions
//!
//! * `F_L(s_1) = C Φ(s_1) B`
//! * `F_H^{(ξ)}(s_1..s_{ξ+1}) = C Φ(s_{ξ+1}) H_ξ (Φ(s_ξ)B ⊗ … ⊗ Φ(s_1)B)`
//! * `F_N^{(η)}(s_1..s_{η+1}) = C Φ(s_{η+1}) N_η (I_m ⊗ Φ(s_η)B ⊗ … ⊗ Φ(s_1)B)`
//!
//! with `Φ(s) = (sE − A)⁻¹`. Matrix-valued results list columns with the
//! rightmost Kronecker factor running fastest.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linsolve::{factor_pencil, PencilCache};
use crate::sparse::SparseMatrix;
use crate::system::{AffineParametricSystem, PolynomialSystem};

pub type C64 = Complex64;

/// Which transfer function to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfKind {
    Linear,
    /// `F_H^{(ξ)}`.
    H(usize),
    /// `F_N^{(η)}`.
    N(usize),
}

impl TfKind {
    /// Number of frequency arguments.
    pub fn arity(&self) -> usize {
        match *self {
            Self::Linear => 1,
            Self::H(k) | Self::N(k) => k + 1,
        }
    }
}

/// Operations a model must expose for transfer evaluation and basis
/// construction.
pub trait TransferModel: Sync {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn q(&self) -> usize;
    fn has_h(&self, degree: usize) -> bool;
    fn has_n(&self, degree: usize) -> bool;
    fn h_degrees(&self) -> Vec<usize>;
    fn n_degrees(&self) -> Vec<usize>;

    /// `Φ(s) R`, or `Φ(s)ᵀ R` when `transpose` is set.
    fn phi_solve(&self, s: C64, rhs: &DMatrix<C64>, transpose: bool) -> Result<DMatrix<C64>>;
    /// `B` as a dense complex matrix.
    fn b_dense(&self) -> DMatrix<C64>;
    /// `Cᵀ` as a dense complex matrix.
    fn ct_dense(&self) -> DMatrix<C64>;
    /// `H_ξ (s_1 ⊗ … ⊗ s_ξ)`.
    fn apply_h(&self, degree: usize, slots: &[&[C64]]) -> Result<Vec<C64>>;
    /// `H_ξ,(2) (s_1 ⊗ … ⊗ s_{ξ−1} ⊗ w)`.
    fn apply_h_adjoint(&self, degree: usize, w: &[C64], slots: &[&[C64]]) -> Result<Vec<C64>>;
    /// `N_η^{(l)} (s_1 ⊗ … ⊗ s_η)` for input `l`.
    fn apply_n(&self, degree: usize, input: usize, slots: &[&[C64]]) -> Result<Vec<C64>>;
    /// `N_η,(2)^{(l)} (s_1 ⊗ … ⊗ s_{η−1} ⊗ w)`.
    fn apply_n_adjoint(&self, degree: usize, input: usize, w: &[C64], slots: &[&[C64]]) -> Result<Vec<C64>>;
}

pub(crate) fn to_complex(m: &SparseMatrix) -> DMatrix<C64> {
    m.to_dense().map(|v| C64::new(v, 0.0))
}

/// Full-order system with a shifted-pencil factorization cache.
pub struct FullModel<'a> {
    sys: &'a PolynomialSystem,
    cache: PencilCache,
    key: Vec<f64>,
}

impl<'a> FullModel<'a> {
    pub fn new(sys: &'a PolynomialSystem) -> Self {
        Self::with_cache(sys, PencilCache::default())
    }

    pub fn with_cache(sys: &'a PolynomialSystem, cache: PencilCache) -> Self {
        Self {
            sys,
            cache,
            key: Vec::new(),
        }
    }

    /// Tags cache entries with a parameter vector.
    pub fn with_parameter_key(mut self, p: &[f64]) -> Self {
        self.key = p.to_vec();
        self
    }

    pub fn system(&self) -> &PolynomialSystem {
        self.sys
    }

    pub fn cache(&self) -> &PencilCache {
        &self.cache
    }
}

impl TransferModel for FullModel<'_> {
    fn n(&self) -> usize {
        self.sys.n()
    }

    fn m(&self) -> usize {
        self.sys.m()
    }

    fn q(&self) -> usize {
        self.sys.q()
    }

    fn has_h(&self, degree: usize) -> bool {
        self.sys.h(degree).is_some()
    }

    fn has_n(&self, degree: usize) -> bool {
        self.sys.n_term(degree).is_some()
    }

    fn h_degrees(&self) -> Vec<usize> {
        self.sys.h_terms().map(|(k, _)| k).collect()
    }

    fn n_degrees(&self) -> Vec<usize> {
        self.sys.n_terms().map(|(k, _)| k).collect()
    }

    fn phi_solve(&self, s: C64, rhs: &DMatrix<C64>, transpose: bool) -> Result<DMatrix<C64>> {
        let singular = || Error::SingularPencil { s, point: None };
        let lu = self
            .cache
            .get_or_factor(s, &self.key, || factor_pencil(self.sys.e(), self.sys.a(), s))
            .map_err(|_| singular())?;
        let out = if transpose {
            lu.solve_transpose(rhs)
        } else {
            lu.solve(rhs)
        };
        out.map_err(|_| singular())
    }

    fn b_dense(&self) -> DMatrix<C64> {
        to_complex(self.sys.b())
    }

    fn ct_dense(&self) -> DMatrix<C64> {
        to_complex(self.sys.c()).transpose()
    }

    fn apply_h(&self, degree: usize, slots: &[&[C64]]) -> Result<Vec<C64>> {
        self.sys.apply_h(degree, slots)
    }

    fn apply_h_adjoint(&self, degree: usize, w: &[C64], slots: &[&[C64]]) -> Result<Vec<C64>> {
        let h = self.sys.h(degree).ok_or(Error::MissingTerm { kind: "H", degree })?;
        Ok(h.adjoint_last(w, slots))
    }

    fn apply_n(&self, degree: usize, input: usize, slots: &[&[C64]]) -> Result<Vec<C64>> {
        let nt = self.sys.n_term(degree).ok_or(Error::MissingTerm { kind: "N", degree })?;
        Ok(nt.slice(input).eval_slots(slots))
    }

    fn apply_n_adjoint(&self, degree: usize, input: usize, w: &[C64], slots: &[&[C64]]) -> Result<Vec<C64>> {
        let nt = self.sys.n_term(degree).ok_or(Error::MissingTerm { kind: "N", degree })?;
        Ok(nt.slice(input).adjoint_last(w, slots))
    }
}

/// `Φ(s) B` for the model.
pub fn phi_b<M: TransferModel + ?Sized>(model: &M, s: C64) -> Result<DMatrix<C64>> {
    model.phi_solve(s, &model.b_dense(), false)
}

fn col(m: &DMatrix<C64>, j: usize) -> Vec<C64> {
    m.column(j).iter().copied().collect()
}

/// Enumerates multi-indices over `k` slots of size `m`, leftmost slowest.
fn multi_indices(m: usize, k: usize) -> Vec<Vec<usize>> {
    let total = m.pow(k as u32);
    (0..total)
        .map(|mut idx| {
            let mut digits = vec![0; k];
            for d in digits.iter_mut().rev() {
                *d = idx % m;
                idx /= m;
            }
            digits
        })
        .collect()
}

fn output_side<M: TransferModel + ?Sized>(model: &M, s: C64, cols: Vec<Vec<C64>>) -> Result<DMatrix<C64>> {
    let n = model.n();
    let k = cols.len();
    let flat: Vec<C64> = cols.into_iter().flatten().collect();
    let v = DMatrix::from_column_slice(n, k, &flat);
    let x = model.phi_solve(s, &v, false)?;
    Ok(model.ct_dense().transpose() * x)
}

pub fn eval_fl<M: TransferModel + ?Sized>(model: &M, s1: C64) -> Result<DMatrix<C64>> {
    let p = phi_b(model, s1)?;
    Ok(model.ct_dense().transpose() * p)
}

/// `s[k]` is `s_{k+1}`; `s.len() = ξ + 1`.
pub fn eval_fh<M: TransferModel + ?Sized>(model: &M, degree: usize, s: &[C64]) -> Result<DMatrix<C64>> {
    if degree < 2 {
        return Err(Error::InvalidDegree(degree));
    }
    if s.len() != degree + 1 {
        return Err(Error::DimensionMismatch {
            context: "F_H frequency count",
            expected: degree + 1,
            got: s.len(),
        });
    }
    if !model.has_h(degree) {
        return Err(Error::MissingTerm { kind: "H", degree });
    }
    let ps: Vec<DMatrix<C64>> = s[..degree].iter().map(|&sk| phi_b(model, sk)).collect::<Result<_>>()?;
    let mut cols = Vec::new();
    for idx in multi_indices(model.m(), degree) {
        // Leftmost slot pairs with Φ(s_ξ)B.
        let vecs: Vec<Vec<C64>> = idx.iter().enumerate().map(|(slot, &j)| col(&ps[degree - 1 - slot], j)).collect();
        let refs: Vec<&[C64]> = vecs.iter().map(|v| v.as_slice()).collect();
        cols.push(model.apply_h(degree, &refs)?);
    }
    output_side(model, s[degree], cols)
}

/// `s[k]` is `s_{k+1}`; `s.len() = η + 1`.
pub fn eval_fn<M: TransferModel + ?Sized>(model: &M, degree: usize, s: &[C64]) -> Result<DMatrix<C64>> {
    if degree == 0 {
        return Err(Error::InvalidDegree(0));
    }
    if s.len() != degree + 1 {
        return Err(Error::DimensionMismatch {
            context: "F_N frequency count",
            expected: degree + 1,
            got: s.len(),
        });
    }
    if !model.has_n(degree) {
        return Err(Error::MissingTerm { kind: "N", degree });
    }
    let ps: Vec<DMatrix<C64>> = s[..degree].iter().map(|&sk| phi_b(model, sk)).collect::<Result<_>>()?;
    let mut cols = Vec::new();
    for l in 0..model.m() {
        for idx in multi_indices(model.m(), degree) {
            let vecs: Vec<Vec<C64>> = idx.iter().enumerate().map(|(slot, &j)| col(&ps[degree - 1 - slot], j)).collect();
            let refs: Vec<&[C64]> = vecs.iter().map(|v| v.as_slice()).collect();
            cols.push(model.apply_n(degree, l, &refs)?);
        }
    }
    output_side(model, s[degree], cols)
}

pub fn eval<M: TransferModel + ?Sized>(model: &M, kind: TfKind, s: &[C64]) -> Result<DMatrix<C64>> {
    match kind {
        TfKind::Linear => {
            if s.len() != 1 {
                return Err(Error::DimensionMismatch {
                    context: "F_L frequency count",
                    expected: 1,
                    got: s.len(),
                });
            }
            eval_fl(model, s[0])
        }
        TfKind::H(k) => eval_fh(model, k, s),
        TfKind::N(k) => eval_fn(model, k, s),
    }
}

/// Evaluates the parametric family at `p` through the frozen system.
/// Factorizations are cached per `(s, p)` in `cache`.
pub fn eval_parametric(
    psys: &AffineParametricSystem,
    kind: TfKind,
    s: &[C64],
    p: &[f64],
    cache: Option<PencilCache>,
) -> Result<DMatrix<C64>> {
    let sys = psys.assemble_at_parameter(p)?;
    let model = FullModel::with_cache(&sys, cache.unwrap_or_default()).with_parameter_key(p);
    eval(&model, kind, s)
}
