//! Dense reduced-order models.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;

use crate::cur::CurHyperModel;
use crate::error::{check_dim, Error, Result};
use crate::kron::kron_all;
use crate::sparse::{Scalar, SparseMatrix};
use crate::system::{
    decode_index, load_system_checked, save_system, AffineTerm, Coefficient, ExplicitTensor, Manifest, Nonlinearity,
    PolynomialSystem,
};
use crate::transfer::{TransferModel, C64};

/// `Σ_j M[:, col0 + j] · (s_1 ⊗ … ⊗ s_k)_j`.
pub(crate) fn unfold_apply<T: Scalar>(mat: &DMatrix<f64>, col0: usize, slots: &[&[T]]) -> Vec<T> {
    let k = kron_all(slots);
    let mut out = vec![T::zero(); mat.nrows()];
    for (j, &kj) in k.iter().enumerate() {
        for (o, &v) in out.iter_mut().zip(mat.column(col0 + j).iter()) {
            *o += kj.scale(v);
        }
    }
    out
}

/// Contracts the output mode with `w` and the leading slots with `slots`,
/// leaving the rightmost slot free.
pub(crate) fn unfold_adjoint_last<T: Scalar>(
    mat: &DMatrix<f64>,
    col0: usize,
    r: usize,
    degree: usize,
    w: &[T],
    slots: &[&[T]],
) -> Vec<T> {
    let width = r.pow(degree as u32);
    let lead: Vec<T> = if slots.is_empty() { vec![T::one()] } else { kron_all(slots) };
    let mut out = vec![T::zero(); r];
    for j in 0..width {
        let lj = lead[j / r];
        let col = mat.column(col0 + j);
        let y = col.iter().zip(w).fold(T::zero(), |acc, (&m, &wi)| acc + wi.scale(m));
        out[j % r] += y * lj;
    }
    out
}

/// Jacobian of `x ↦ M[:, col0..col0+r^k] x^{⊗k}`.
pub(crate) fn unfold_jacobian(mat: &DMatrix<f64>, col0: usize, r: usize, degree: usize, x: &[f64]) -> DMatrix<f64> {
    let width = r.pow(degree as u32);
    let mut jac = DMatrix::zeros(mat.nrows(), r);
    let mut digits = vec![0; degree];
    for j in 0..width {
        decode_index(j, r, &mut digits);
        for k in 0..degree {
            let w: f64 = (0..degree).filter(|&l| l != k).map(|l| x[digits[l]]).product();
            if w == 0.0 {
                continue;
            }
            let mut target = jac.column_mut(digits[k]);
            target.axpy(w, &mat.column(col0 + j), 1.0);
        }
    }
    jac
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Ĥ_ξ, `r × r^ξ`.
    pub h: BTreeMap<usize, DMatrix<f64>>,
    /// N̂_η, `r × m·r^η`, input mode leftmost.
    pub nb: BTreeMap<usize, DMatrix<f64>>,
    /// Replaces Ĥ_ξ in time-domain evaluation when present.
    pub hyper: BTreeMap<usize, CurHyperModel>,
}

impl ReducedSystem {
    pub fn new(e: DMatrix<f64>, a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let r = a.nrows();
        check_dim("Â columns", r, a.ncols())?;
        check_dim("Ê shape", r * r, e.nrows() * e.ncols())?;
        check_dim("B̂ rows", r, b.nrows())?;
        check_dim("Ĉ columns", r, c.ncols())?;
        Ok(Self {
            e,
            a,
            b,
            c,
            h: BTreeMap::new(),
            nb: BTreeMap::new(),
            hyper: BTreeMap::new(),
        })
    }

    pub fn with_h(mut self, degree: usize, h: DMatrix<f64>) -> Result<Self> {
        check_dim("Ĥ rows", self.r(), h.nrows())?;
        check_dim("Ĥ columns", self.r().pow(degree as u32), h.ncols())?;
        self.h.insert(degree, h);
        Ok(self)
    }

    pub fn with_n(mut self, degree: usize, n: DMatrix<f64>) -> Result<Self> {
        check_dim("N̂ rows", self.r(), n.nrows())?;
        check_dim("N̂ columns", self.m() * self.r().pow(degree as u32), n.ncols())?;
        self.nb.insert(degree, n);
        Ok(self)
    }

    pub fn with_hyper(mut self, model: CurHyperModel) -> Result<Self> {
        check_dim("hyper-reduced output", self.r(), model.r())?;
        self.hyper.insert(model.degree, model);
        Ok(self)
    }

    pub fn without_hyper(&self) -> Self {
        Self {
            hyper: BTreeMap::new(),
            ..self.clone()
        }
    }

    pub fn r(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn q(&self) -> usize {
        self.c.nrows()
    }

    /// Reciprocal condition estimate of Ê from its singular values; zero when
    /// Ê is numerically singular.
    pub fn e_rcond(&self) -> f64 {
        let sv = self.e.singular_values();
        let (mx, mn) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        if mx == 0.0 {
            0.0
        } else {
            mn / mx
        }
    }

    pub fn check_e(&self) -> Result<()> {
        if self.e_rcond() < 1e-14 {
            return Err(Error::SingularMatrix("reduced E is numerically singular".into()));
        }
        Ok(())
    }

    pub fn rhs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_dim("reduced state length", self.r(), x.len())?;
        check_dim("input length", self.m(), u.len())?;
        let r = self.r();
        let mut out = vec![0.0; r];
        for i in 0..r {
            out[i] = (0..r).map(|j| self.a[(i, j)] * x[j]).sum::<f64>()
                + (0..self.m()).map(|l| self.b[(i, l)] * u[l]).sum::<f64>();
        }
        for (&k, h) in &self.h {
            let y = match self.hyper.get(&k) {
                Some(hm) => hm.eval(x),
                None => unfold_apply(h, 0, &vec![x; k]),
            };
            out.iter_mut().zip(&y).for_each(|(o, v)| *o += v);
        }
        for (&k, hm) in &self.hyper {
            if !self.h.contains_key(&k) {
                let y = hm.eval(x);
                out.iter_mut().zip(&y).for_each(|(o, v)| *o += v);
            }
        }
        for (&k, n) in &self.nb {
            let block = r.pow(k as u32);
            for (l, &ul) in u.iter().enumerate() {
                if ul == 0.0 {
                    continue;
                }
                let y = unfold_apply(n, l * block, &vec![x; k]);
                out.iter_mut().zip(&y).for_each(|(o, v)| *o += ul * v);
            }
        }
        Ok(out)
    }

    pub fn jacobian(&self, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
        check_dim("reduced state length", self.r(), x.len())?;
        check_dim("input length", self.m(), u.len())?;
        let r = self.r();
        let mut jac = self.a.clone();
        for (&k, h) in &self.h {
            if !self.hyper.contains_key(&k) {
                jac += unfold_jacobian(h, 0, r, k, x);
            }
        }
        for hm in self.hyper.values() {
            jac += hm.jacobian(x);
        }
        for (&k, n) in &self.nb {
            let block = r.pow(k as u32);
            for (l, &ul) in u.iter().enumerate() {
                if ul != 0.0 {
                    jac += unfold_jacobian(n, l * block, r, k, x) * ul;
                }
            }
        }
        Ok(jac)
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        (0..self.q())
            .map(|i| (0..self.r()).map(|j| self.c[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Sparse-storage copy usable wherever a full-order system is expected.
    pub fn to_polynomial_system(&self) -> Result<PolynomialSystem> {
        let mut sys = PolynomialSystem::with_e_check(
            SparseMatrix::from_dense(&self.e),
            SparseMatrix::from_dense(&self.a),
            SparseMatrix::from_dense(&self.b),
            SparseMatrix::from_dense(&self.c),
            false,
        )?;
        for (&k, h) in &self.h {
            sys = sys.with_h(k, Nonlinearity::Explicit(ExplicitTensor::new(SparseMatrix::from_dense(h), k)?))?;
        }
        for (&k, n) in &self.nb {
            sys = sys.with_n(k, SparseMatrix::from_dense(n))?;
        }
        Ok(sys)
    }

    pub fn from_polynomial_system(sys: &PolynomialSystem) -> Result<Self> {
        let mut rom = Self::new(sys.e().to_dense(), sys.a().to_dense(), sys.b().to_dense(), sys.c().to_dense())?;
        for (k, h) in sys.h_terms() {
            rom = rom.with_h(k, h.explicit_unfolding(usize::MAX)?.to_dense())?;
        }
        for (k, n) in sys.n_terms() {
            rom = rom.with_n(k, n.matrix.to_dense())?;
        }
        Ok(rom)
    }

    /// Writes the polynomial-system layout plus one `cur_H{k}` directory per
    /// hyper-reduced term.
    pub fn save(&self, dir: &Path, extra: &[(String, String)]) -> Result<()> {
        let mut extra = extra.to_vec();
        extra.push(("reduced".into(), "true".into()));
        extra.push((
            "hyper_degrees".into(),
            self.hyper.keys().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
        ));
        save_system(dir, &self.to_polynomial_system()?, &extra)?;
        for (k, hm) in &self.hyper {
            hm.save(&dir.join(format!("cur_H{k}")))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut rom = Self::from_polynomial_system(&load_system_checked(dir, false)?)?;
        let man = Manifest::read(dir)?;
        if let Some(list) = man.get("hyper_degrees").filter(|s| !s.is_empty()) {
            for k in list.split(',') {
                let k: usize = k.trim().parse().map_err(|_| Error::Parse(format!("bad hyper degree {k}")))?;
                rom = rom.with_hyper(CurHyperModel::load(&dir.join(format!("cur_H{k}")))?)?;
            }
        }
        Ok(rom)
    }

    fn pencil(&self, s: C64, transpose: bool) -> DMatrix<C64> {
        let r = self.r();
        DMatrix::from_fn(r, r, |i, j| {
            let (i, j) = if transpose { (j, i) } else { (i, j) };
            s * self.e[(i, j)] - self.a[(i, j)]
        })
    }
}

impl TransferModel for ReducedSystem {
    fn n(&self) -> usize {
        self.r()
    }

    fn m(&self) -> usize {
        self.b.ncols()
    }

    fn q(&self) -> usize {
        self.c.nrows()
    }

    fn has_h(&self, degree: usize) -> bool {
        self.h.contains_key(&degree)
    }

    fn has_n(&self, degree: usize) -> bool {
        self.nb.contains_key(&degree)
    }

    fn h_degrees(&self) -> Vec<usize> {
        self.h.keys().copied().collect()
    }

    fn n_degrees(&self) -> Vec<usize> {
        self.nb.keys().copied().collect()
    }

    fn phi_solve(&self, s: C64, rhs: &DMatrix<C64>, transpose: bool) -> Result<DMatrix<C64>> {
        let lu = self.pencil(s, transpose).lu();
        lu.solve(rhs)
            .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
            .ok_or(Error::SingularPencil { s, point: None })
    }

    fn b_dense(&self) -> DMatrix<C64> {
        self.b.map(|v| C64::new(v, 0.0))
    }

    fn ct_dense(&self) -> DMatrix<C64> {
        self.c.transpose().map(|v| C64::new(v, 0.0))
    }

    fn apply_h(&self, degree: usize, slots: &[&[C64]]) -> Result<Vec<C64>> {
        let h = self.h.get(&degree).ok_or(Error::MissingTerm { kind: "H", degree })?;
        Ok(unfold_apply(h, 0, slots))
    }

    fn apply_h_adjoint(&self, degree: usize, w: &[C64], slots: &[&[C64]]) -> Result<Vec<C64>> {
        let h = self.h.get(&degree).ok_or(Error::MissingTerm { kind: "H", degree })?;
        Ok(unfold_adjoint_last(h, 0, self.r(), degree, w, slots))
    }

    fn apply_n(&self, degree: usize, input: usize, slots: &[&[C64]]) -> Result<Vec<C64>> {
        let n = self.nb.get(&degree).ok_or(Error::MissingTerm { kind: "N", degree })?;
        Ok(unfold_apply(n, input * self.r().pow(degree as u32), slots))
    }

    fn apply_n_adjoint(&self, degree: usize, input: usize, w: &[C64], slots: &[&[C64]]) -> Result<Vec<C64>> {
        let n = self.nb.get(&degree).ok_or(Error::MissingTerm { kind: "N", degree })?;
        Ok(unfold_adjoint_last(n, input * self.r().pow(degree as u32), self.r(), degree, w, slots))
    }
}

/// Reduced affine family: one projected matrix per affine term.
#[derive(Clone, Debug)]
pub struct ParametricReducedSystem {
    pub e: Vec<AffineTerm<DMatrix<f64>>>,
    pub a: Vec<AffineTerm<DMatrix<f64>>>,
    pub b: Vec<AffineTerm<DMatrix<f64>>>,
    pub c: Vec<AffineTerm<DMatrix<f64>>>,
    pub h: BTreeMap<usize, Vec<AffineTerm<DMatrix<f64>>>>,
    pub nb: BTreeMap<usize, Vec<AffineTerm<DMatrix<f64>>>>,
    pub param_box: Vec<(f64, f64)>,
}

fn combine(terms: &[AffineTerm<DMatrix<f64>>], p: &[f64]) -> Option<DMatrix<f64>> {
    let mut it = terms.iter();
    let first = it.next()?;
    let mut acc = &first.matrix * first.coefficient.eval(p);
    for t in it {
        acc += &t.matrix * t.coefficient.eval(p);
    }
    Some(acc)
}

impl ParametricReducedSystem {
    pub fn r(&self) -> usize {
        self.a.first().map(|t| t.matrix.nrows()).unwrap_or(0)
    }

    pub fn assemble_at_parameter(&self, p: &[f64]) -> Result<ReducedSystem> {
        if p.len() != self.param_box.len() {
            return Err(Error::DimensionMismatch {
                context: "parameter length",
                expected: self.param_box.len(),
                got: p.len(),
            });
        }
        if p.iter().zip(&self.param_box).any(|(v, (lo, hi))| v < lo || v > hi) {
            warn!("parameter {p:?} outside the box {:?}", self.param_box);
        }
        let get = |t: &[AffineTerm<DMatrix<f64>>], what: &str| {
            combine(t, p).ok_or_else(|| Error::InvalidArgument(format!("no affine terms for {what}")))
        };
        let mut rom = ReducedSystem::new(get(&self.e, "E")?, get(&self.a, "A")?, get(&self.b, "B")?, get(&self.c, "C")?)?;
        for (&k, t) in &self.h {
            rom = rom.with_h(k, get(t, "H")?)?;
        }
        for (&k, t) in &self.nb {
            rom = rom.with_n(k, get(t, "N")?)?;
        }
        Ok(rom)
    }

    /// Writes one directory per affine term role with coefficient tags in the
    /// manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut man = Manifest::new();
        man.set("kind", "parametric-reduced");
        man.set("params", self.param_box.len());
        for (j, (lo, hi)) in self.param_box.iter().enumerate() {
            man.set(format!("box.{}", j + 1), format!("{lo:.16e} {hi:.16e}"));
        }
        let mut write = |prefix: String, terms: &[AffineTerm<DMatrix<f64>>]| -> Result<()> {
            man.set(format!("{prefix}.terms"), terms.len());
            for (i, t) in terms.iter().enumerate() {
                let file = format!("{prefix}_{i}.mtx");
                crate::mmio::write_dense(&dir.join(&file), &t.matrix)?;
                man.set(format!("{prefix}.{i}.coefficient"), t.coefficient.tag());
                man.set(format!("{prefix}.{i}.file"), file);
            }
            Ok(())
        };
        for (name, t) in [("E", &self.e), ("A", &self.a), ("B", &self.b), ("C", &self.c)] {
            write(name.into(), t)?;
        }
        for (k, t) in &self.h {
            write(format!("H{k}"), t)?;
        }
        for (k, t) in &self.nb {
            write(format!("N{k}"), t)?;
        }
        let hk = self.h.keys().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        let nk = self.nb.keys().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        man.set("h_degrees", hk);
        man.set("n_degrees", nk);
        man.write(dir)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let man = Manifest::read(dir)?;
        if man.require("kind")? != "parametric-reduced" {
            return Err(Error::Parse("manifest does not describe a parametric reduced system".into()));
        }
        let registry = BTreeMap::new();
        let read = |prefix: &str| -> Result<Vec<AffineTerm<DMatrix<f64>>>> {
            (0..man.require_usize(&format!("{prefix}.terms"))?)
                .map(|i| {
                    let c = Coefficient::from_tag(man.require(&format!("{prefix}.{i}.coefficient"))?, &registry)?;
                    let m = crate::mmio::read_dense(&dir.join(man.require(&format!("{prefix}.{i}.file"))?))?;
                    Ok(AffineTerm::new(c, m))
                })
                .collect()
        };
        let degrees = |key: &str| -> Result<Vec<usize>> {
            match man.get(key) {
                None | Some("") => Ok(Vec::new()),
                Some(v) => v
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad degree list {v}"))))
                    .collect(),
            }
        };
        let param_box = (1..=man.require_usize("params")?)
            .map(|j| {
                let v = man.require(&format!("box.{j}"))?;
                let parts: Vec<f64> = v
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad box entry {v}"))))
                    .collect::<Result<_>>()?;
                match parts.as_slice() {
                    [lo, hi] => Ok((*lo, *hi)),
                    _ => Err(Error::Parse(format!("bad box entry {v}"))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            e: read("E")?,
            a: read("A")?,
            b: read("B")?,
            c: read("C")?,
            h: degrees("h_degrees")?.into_iter().map(|k| Ok((k, read(&format!("H{k}"))?))).collect::<Result<_>>()?,
            nb: degrees("n_degrees")?.into_iter().map(|k| Ok((k, read(&format!("N{k}"))?))).collect::<Result<_>>()?,
            param_box,
        })
    }
}
