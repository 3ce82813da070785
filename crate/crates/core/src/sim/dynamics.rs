use nalgebra::DMatrix;

use crate::error::Result;
use crate::rom::ReducedSystem;
use crate::sparse::SparseMatrix;
use crate::system::PolynomialSystem;

/// Linear operator in whatever storage the model uses natively.
#[derive(Clone, Debug)]
pub enum Operator {
    Identity(usize),
    Sparse(SparseMatrix),
    Dense(DMatrix<f64>),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Identity(n) => *n,
            Operator::Sparse(m) => m.nrows(),
            Operator::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Operator::Identity(_) => x.to_vec(),
            Operator::Sparse(m) => m.mul_vec(x),
            Operator::Dense(m) => (m * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec(),
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Operator::Identity(n) => DMatrix::identity(*n, *n),
            Operator::Sparse(m) => m.to_dense(),
            Operator::Dense(m) => m.clone(),
        }
    }

    fn to_sparse(&self) -> SparseMatrix {
        match self {
            Operator::Identity(n) => SparseMatrix::identity(*n),
            Operator::Sparse(m) => m.clone(),
            Operator::Dense(m) => SparseMatrix::from_dense(m),
        }
    }

    /// `self − c · other`, dense if either side is dense.
    pub fn minus_scaled(&self, c: f64, other: &Operator) -> Result<Operator> {
        let n = self.dim();
        match (self, other) {
            (Operator::Dense(_), _) | (_, Operator::Dense(_)) => Ok(Operator::Dense(self.to_dense() - other.to_dense() * c)),
            _ => {
                let (a, b) = (self.to_sparse(), other.to_sparse());
                Ok(Operator::Sparse(SparseMatrix::lin_comb(n, n, &[(1.0, &a), (-c, &b)])?))
            }
        }
    }
}

/// `M ẋ = f(x, u)`, `y = C x`.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;
    fn inputs(&self) -> usize;
    fn outputs(&self) -> usize;
    fn mass(&self) -> Operator;
    fn rhs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, x: &[f64], u: &[f64]) -> Result<Operator>;
    fn output(&self, x: &[f64]) -> Vec<f64>;
}

impl Dynamics for PolynomialSystem {
    fn dim(&self) -> usize {
        self.n()
    }

    fn inputs(&self) -> usize {
        self.m()
    }

    fn outputs(&self) -> usize {
        self.q()
    }

    fn mass(&self) -> Operator {
        if self.e().is_identity() {
            Operator::Identity(self.n())
        } else {
            Operator::Sparse(self.e().clone())
        }
    }

    fn rhs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        PolynomialSystem::rhs(self, x, u)
    }

    fn jacobian(&self, x: &[f64], u: &[f64]) -> Result<Operator> {
        Ok(Operator::Sparse(PolynomialSystem::jacobian(self, x, u)?))
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        PolynomialSystem::output(self, x)
    }
}

impl Dynamics for ReducedSystem {
    fn dim(&self) -> usize {
        self.r()
    }

    fn inputs(&self) -> usize {
        self.m()
    }

    fn outputs(&self) -> usize {
        self.q()
    }

    fn mass(&self) -> Operator {
        Operator::Dense(self.e.clone())
    }

    fn rhs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        ReducedSystem::rhs(self, x, u)
    }

    fn jacobian(&self, x: &[f64], u: &[f64]) -> Result<Operator> {
        Ok(Operator::Dense(ReducedSystem::jacobian(self, x, u)?))
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        ReducedSystem::output(self, x)
    }
}
