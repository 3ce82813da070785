use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use log::warn;

use super::{ExplicitTensor, Nonlinearity, PolynomialSystem, DEFAULT_UNFOLDING_CAP};
use crate::error::{check_dim, Error, Result};
use crate::sparse::SparseMatrix;

pub type CoefficientFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Scalar coefficient function of the parameter vector.
#[derive(Clone)]
pub enum Coefficient {
    Const,
    /// Component `p[j]` (0-based).
    Param(usize),
    /// A registered callback, identified by name in serialized form.
    Callback { name: String, f: CoefficientFn },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl Coefficient {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            Self::Const => 1.0,
            Self::Param(j) => p[*j],
            Self::Callback { f, .. } => f(p),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Self::Const => "1".into(),
            Self::Param(j) => format!("p{}", j + 1),
            Self::Callback { name, .. } => format!("fn:{name}"),
        }
    }

    /// Parses a tag; callbacks are looked up in `registry`.
    pub fn from_tag(tag: &str, registry: &BTreeMap<String, CoefficientFn>) -> Result<Self> {
        if tag == "1" {
            return Ok(Self::Const);
        }
        if let Some(rest) = tag.strip_prefix("fn:") {
            let f = registry
                .get(rest)
                .ok_or_else(|| Error::Parse(format!("unregistered coefficient callback {rest}")))?;
            return Ok(Self::Callback {
                name: rest.to_string(),
                f: f.clone(),
            });
        }
        if let Some(rest) = tag.strip_prefix('p') {
            let j: usize = rest
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient tag {tag}")))?;
            if j == 0 {
                return Err(Error::Parse("parameter tags are 1-based".into()));
            }
            return Ok(Self::Param(j - 1));
        }
        Err(Error::Parse(format!("bad coefficient tag {tag}")))
    }

    pub fn is_affine(&self) -> bool {
        !matches!(self, Self::Callback { .. })
    }
}

#[derive(Clone, Debug)]
pub struct AffineTerm<M> {
    pub coefficient: Coefficient,
    pub matrix: M,
}

impl<M> AffineTerm<M> {
    pub fn new(coefficient: Coefficient, matrix: M) -> Self {
        Self { coefficient, matrix }
    }

    pub fn constant(matrix: M) -> Self {
        Self::new(Coefficient::Const, matrix)
    }
}

/// `E(p) = Σ α_e^{(i)}(p) E^{(i)}` and likewise for every other matrix.
#[derive(Clone, Debug)]
pub struct AffineParametricSystem {
    n: usize,
    m: usize,
    q: usize,
    pub(crate) e: Vec<AffineTerm<SparseMatrix>>,
    pub(crate) a: Vec<AffineTerm<SparseMatrix>>,
    pub(crate) b: Vec<AffineTerm<SparseMatrix>>,
    pub(crate) c: Vec<AffineTerm<SparseMatrix>>,
    pub(crate) h: BTreeMap<usize, Vec<AffineTerm<Nonlinearity>>>,
    pub(crate) nb: BTreeMap<usize, Vec<AffineTerm<SparseMatrix>>>,
    param_box: Vec<(f64, f64)>,
}

fn check_family(terms: &[AffineTerm<SparseMatrix>], shape: (usize, usize), what: &'static str) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} family has no terms")));
    }
    for t in terms {
        check_dim(what, shape.0, t.matrix.nrows())?;
        check_dim(what, shape.1, t.matrix.ncols())?;
    }
    Ok(())
}

fn sum_family(terms: &[AffineTerm<SparseMatrix>], p: &[f64]) -> Result<SparseMatrix> {
    let (r, c) = terms[0].matrix.shape();
    let weighted: Vec<(f64, &SparseMatrix)> = terms.iter().map(|t| (t.coefficient.eval(p), &t.matrix)).collect();
    SparseMatrix::lin_comb(r, c, &weighted)
}

impl AffineParametricSystem {
    pub fn new(
        e: Vec<AffineTerm<SparseMatrix>>,
        a: Vec<AffineTerm<SparseMatrix>>,
        b: Vec<AffineTerm<SparseMatrix>>,
        c: Vec<AffineTerm<SparseMatrix>>,
        param_box: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = a.first().map(|t| t.matrix.nrows()).ok_or_else(|| Error::InvalidArgument("A family has no terms".into()))?;
        let m = b.first().map(|t| t.matrix.ncols()).ok_or_else(|| Error::InvalidArgument("B family has no terms".into()))?;
        let q = c.first().map(|t| t.matrix.nrows()).ok_or_else(|| Error::InvalidArgument("C family has no terms".into()))?;
        check_family(&e, (n, n), "E term shape")?;
        check_family(&a, (n, n), "A term shape")?;
        check_family(&b, (n, m), "B term shape")?;
        check_family(&c, (q, n), "C term shape")?;
        for (lo, hi) in &param_box {
            if lo > hi {
                return Err(Error::InvalidArgument(format!("empty parameter interval [{lo}, {hi}]")));
            }
        }
        let sys = Self {
            n,
            m,
            q,
            e,
            a,
            b,
            c,
            h: BTreeMap::new(),
            nb: BTreeMap::new(),
            param_box,
        };
        sys.check_param_refs()?;
        Ok(sys)
    }

    /// Constant-coefficient family wrapping a fixed system.
    pub fn from_system(sys: &PolynomialSystem, param_box: Vec<(f64, f64)>) -> Result<Self> {
        let mut out = Self::new(
            vec![AffineTerm::constant(sys.e.clone())],
            vec![AffineTerm::constant(sys.a.clone())],
            vec![AffineTerm::constant(sys.b.clone())],
            vec![AffineTerm::constant(sys.c.clone())],
            param_box,
        )?;
        for (&k, h) in &sys.h {
            out.h.insert(k, vec![AffineTerm::constant(h.clone())]);
        }
        for (&k, nt) in &sys.nb {
            out.nb.insert(k, vec![AffineTerm::constant(nt.matrix.clone())]);
        }
        Ok(out)
    }

    fn check_param_refs(&self) -> Result<()> {
        let np = self.param_box.len();
        let bad = self
            .all_coefficients()
            .any(|c| matches!(c, Coefficient::Param(j) if *j >= np));
        if bad {
            return Err(Error::InvalidArgument("coefficient references a parameter outside the box".into()));
        }
        Ok(())
    }

    fn all_coefficients(&self) -> impl Iterator<Item = &Coefficient> {
        self.e
            .iter()
            .chain(&self.a)
            .chain(&self.b)
            .chain(&self.c)
            .map(|t| &t.coefficient)
            .chain(self.h.values().flatten().map(|t| &t.coefficient))
            .chain(self.nb.values().flatten().map(|t| &t.coefficient))
    }

    pub fn with_h(mut self, degree: usize, terms: Vec<AffineTerm<Nonlinearity>>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidDegree(degree));
        }
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty H family".into()));
        }
        for t in &terms {
            t.matrix.validate(self.n, degree)?;
        }
        self.h.insert(degree, terms);
        self.check_param_refs()?;
        Ok(self)
    }

    pub fn with_n(mut self, degree: usize, terms: Vec<AffineTerm<SparseMatrix>>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegree(0));
        }
        check_family(&terms, (self.n, self.m * self.n.pow(degree as u32)), "N term shape")?;
        self.nb.insert(degree, terms);
        self.check_param_refs()?;
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

    pub fn num_params(&self) -> usize {
        self.param_box.len()
    }

    pub fn param_box(&self) -> &[(f64, f64)] {
        &self.param_box
    }

    pub fn e_terms(&self) -> &[AffineTerm<SparseMatrix>] {
        &self.e
    }

    pub fn a_terms(&self) -> &[AffineTerm<SparseMatrix>] {
        &self.a
    }

    pub fn b_terms(&self) -> &[AffineTerm<SparseMatrix>] {
        &self.b
    }

    pub fn c_terms(&self) -> &[AffineTerm<SparseMatrix>] {
        &self.c
    }

    pub fn h_families(&self) -> impl Iterator<Item = (usize, &[AffineTerm<Nonlinearity>])> {
        self.h.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn n_families(&self) -> impl Iterator<Item = (usize, &[AffineTerm<SparseMatrix>])> {
        self.nb.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.param_box.len()
            && p.iter().zip(&self.param_box).all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Freezes the family at `p`. Points outside the box are accepted with a
    /// warning.
    pub fn assemble_at_parameter(&self, p: &[f64]) -> Result<PolynomialSystem> {
        check_dim("parameter vector length", self.param_box.len(), p.len())?;
        if !self.contains(p) {
            warn!("parameter {p:?} lies outside the declared box {:?}; extrapolating", self.param_box);
        }
        let mut sys = PolynomialSystem::new(
            sum_family(&self.e, p)?,
            sum_family(&self.a, p)?,
            sum_family(&self.b, p)?,
            sum_family(&self.c, p)?,
        )?;
        for (&k, terms) in &self.h {
            sys = sys.with_h(k, combine_nonlinear(terms, p, k)?)?;
        }
        for (&k, terms) in &self.nb {
            sys = sys.with_n(k, sum_family(terms, p)?)?;
        }
        Ok(sys)
    }
}

fn combine_nonlinear(terms: &[AffineTerm<Nonlinearity>], p: &[f64], degree: usize) -> Result<Nonlinearity> {
    let all_hadamard = terms.iter().all(|t| matches!(t.matrix, Nonlinearity::Hadamard(_)));
    if all_hadamard {
        let mut out = Vec::new();
        for t in terms {
            if let Nonlinearity::Hadamard(hs) = t.matrix.scaled(t.coefficient.eval(p)) {
                out.extend(hs);
            }
        }
        return Ok(Nonlinearity::Hadamard(out));
    }
    let mut acc: Option<SparseMatrix> = None;
    for t in terms {
        let u = t.matrix.explicit_unfolding(DEFAULT_UNFOLDING_CAP)?.scaled(t.coefficient.eval(p));
        acc = Some(match acc {
            None => u,
            Some(a) => a.add(&u)?,
        });
    }
    Ok(Nonlinearity::Explicit(ExplicitTensor::new(acc.expect("nonempty family"), degree)?))
}
