//! Full-order polynomial systems
//! `E ẋ = A x + Σ_ξ H_ξ x^{⊗ξ} + Σ_η N_η (u ⊗ x^{⊗η}) + B u`, `y = C x`.

mod io;
mod lift;
mod nonlinear;
mod parametric;

use std::collections::BTreeMap;

pub use io::{load_parametric, load_system, save_parametric, save_system, Manifest, MANIFEST};
pub(crate) use io::load_system_checked;
pub use lift::lift_cubic_to_qb;
pub use nonlinear::{decode_index, ExplicitTensor, HadamardTerm, InputTerm, Nonlinearity, DEFAULT_UNFOLDING_CAP};
pub use parametric::{AffineParametricSystem, AffineTerm, Coefficient, CoefficientFn};

use crate::error::{check_dim, Error, Result};
use crate::linsolve::SparseLu;
use crate::sparse::{Scalar, SparseMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSystem {
    n: usize,
    m: usize,
    q: usize,
    pub(crate) e: SparseMatrix,
    pub(crate) a: SparseMatrix,
    pub(crate) b: SparseMatrix,
    pub(crate) c: SparseMatrix,
    pub(crate) h: BTreeMap<usize, Nonlinearity>,
    pub(crate) nb: BTreeMap<usize, InputTerm>,
}

impl PolynomialSystem {
    /// Linear part. Fails if E is not invertible.
    pub fn new(e: SparseMatrix, a: SparseMatrix, b: SparseMatrix, c: SparseMatrix) -> Result<Self> {
        Self::with_e_check(e, a, b, c, true)
    }

    pub(crate) fn with_e_check(e: SparseMatrix, a: SparseMatrix, b: SparseMatrix, c: SparseMatrix, check_e: bool) -> Result<Self> {
        let n = a.nrows();
        check_dim("A columns", n, a.ncols())?;
        check_dim("E rows", n, e.nrows())?;
        check_dim("E columns", n, e.ncols())?;
        check_dim("B rows", n, b.nrows())?;
        check_dim("C columns", n, c.ncols())?;
        if check_e && !e.is_identity() {
            let lu = SparseLu::<f64>::factor(&e).map_err(|_| Error::SingularMatrix("E is singular".into()))?;
            lu.solve_vec(&vec![1.0; n])
                .map_err(|_| Error::SingularMatrix("E is singular".into()))?;
        }
        Ok(Self {
            n,
            m: b.ncols(),
            q: c.nrows(),
            e,
            a,
            b,
            c,
            h: BTreeMap::new(),
            nb: BTreeMap::new(),
        })
    }

    pub fn with_h(mut self, degree: usize, h: Nonlinearity) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidDegree(degree));
        }
        h.validate(self.n, degree)?;
        self.h.insert(degree, h);
        Ok(self)
    }

    /// Adds a Hadamard term, appending to any existing terms of that degree.
    pub fn with_hadamard(mut self, term: HadamardTerm) -> Result<Self> {
        let degree = term.degree();
        if degree < 2 {
            return Err(Error::InvalidDegree(degree));
        }
        check_dim("Hadamard term dimension", self.n, term.n())?;
        match self.h.get_mut(&degree) {
            Some(Nonlinearity::Hadamard(terms)) => terms.push(term),
            Some(Nonlinearity::Explicit(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "H_{degree} already stored explicitly"
                )))
            }
            None => {
                self.h.insert(degree, Nonlinearity::Hadamard(vec![term]));
            }
        }
        Ok(self)
    }

    pub fn with_n(mut self, degree: usize, n_mat: SparseMatrix) -> Result<Self> {
        check_dim("N rows", self.n, n_mat.nrows())?;
        let term = InputTerm::new(n_mat, self.m, degree)?;
        self.nb.insert(degree, term);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Polynomial degree d.
    pub fn degree(&self) -> usize {
        let h = self.h.keys().max().copied().unwrap_or(1);
        let n = self.nb.keys().max().copied().unwrap_or(1);
        h.max(n)
    }

    pub fn e(&self) -> &SparseMatrix {
        &self.e
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn c(&self) -> &SparseMatrix {
        &self.c
    }

    pub fn h(&self, degree: usize) -> Option<&Nonlinearity> {
        self.h.get(&degree)
    }

    pub fn h_terms(&self) -> impl Iterator<Item = (usize, &Nonlinearity)> {
        self.h.iter().map(|(&k, v)| (k, v))
    }

    pub fn n_term(&self, degree: usize) -> Option<&InputTerm> {
        self.nb.get(&degree)
    }

    pub fn n_terms(&self) -> impl Iterator<Item = (usize, &InputTerm)> {
        self.nb.iter().map(|(&k, v)| (k, v))
    }

    /// Right-hand side of `E ẋ = f(x, u)`.
    pub fn rhs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_dim("state length", self.n, x.len())?;
        check_dim("input length", self.m, u.len())?;
        let mut out = self.a.mul_vec(x);
        let bu = self.b.mul_vec(u);
        out.iter_mut().zip(&bu).for_each(|(o, v)| *o += v);
        for h in self.h.values() {
            let y = h.eval(x);
            out.iter_mut().zip(&y).for_each(|(o, v)| *o += v);
        }
        for nt in self.nb.values() {
            let y = nt.eval(u, x);
            out.iter_mut().zip(&y).for_each(|(o, v)| *o += v);
        }
        Ok(out)
    }

    /// `∂f/∂x` at `(x, u)`.
    pub fn jacobian(&self, x: &[f64], u: &[f64]) -> Result<SparseMatrix> {
        check_dim("state length", self.n, x.len())?;
        check_dim("input length", self.m, u.len())?;
        let mut trip: Vec<(usize, usize, f64)> = self.a.triplets().collect();
        for h in self.h.values() {
            h.jacobian_triplets(x, &mut trip);
        }
        for nt in self.nb.values() {
            nt.jacobian_triplets(u, x, &mut trip);
        }
        SparseMatrix::from_triplets(self.n, self.n, trip)
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        self.c.mul_vec(x)
    }

    /// Applies `H_ξ (s_1 ⊗ … ⊗ s_ξ)`.
    pub fn apply_h<T: Scalar>(&self, degree: usize, slots: &[&[T]]) -> Result<Vec<T>> {
        let h = self.h.get(&degree).ok_or(Error::MissingTerm { kind: "H", degree })?;
        Ok(h.eval_slots(slots))
    }

    /// Copy of the system with every Hadamard H term materialized as an
    /// explicit unfolding.
    pub fn with_explicit_unfoldings(&self, cap: usize) -> Result<Self> {
        let mut out = self.clone();
        for (&k, h) in &self.h {
            let u = h.explicit_unfolding(cap)?;
            out.h.insert(k, Nonlinearity::Explicit(ExplicitTensor::new(u, k)?));
        }
        Ok(out)
    }
}
