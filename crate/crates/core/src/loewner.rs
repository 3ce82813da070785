//! Loewner pencil by projection, order selection, and reduced-model assembly.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use log::{info, warn};
use nalgebra::DMatrix;

use crate::dense::thin_svd;
use crate::error::{Error, Result};
use crate::interp::{build_bases_parametric, build_bases_siso_general, build_bases_tangential, InterpMode, InterpolationSet, RawBases};
use crate::kron::row_kron;
use crate::rom::{ParametricReducedSystem, ReducedSystem};
use crate::sparse::SparseMatrix;
use crate::system::{AffineParametricSystem, AffineTerm, InputTerm, Nonlinearity, PolynomialSystem};
use crate::transfer::{FullModel, C64};

pub const DEFAULT_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LoewnerPencil {
    /// `−WᵀE_iV`, one per affine E term.
    pub l: Vec<DMatrix<f64>>,
    /// `−WᵀA_iV`, one per affine A term.
    pub ls: Vec<DMatrix<f64>>,
    /// Singular values of the row concatenation `[𝕃…, 𝕃_s…]`.
    pub sv_row: Vec<f64>,
    /// Singular values of the vertical stack `[𝕃…; 𝕃_s…]`.
    pub sv_col: Vec<f64>,
    y: DMatrix<f64>,
    x: DMatrix<f64>,
}

impl LoewnerPencil {
    fn from_blocks(l: Vec<DMatrix<f64>>, ls: Vec<DMatrix<f64>>) -> Result<Self> {
        let blocks: Vec<&DMatrix<f64>> = l.iter().chain(&ls).collect();
        let (kw, kv) = blocks.first().map(|b| b.shape()).ok_or(Error::EmptyBasis)?;
        if kw == 0 || kv == 0 {
            return Err(Error::EmptyBasis);
        }
        let nb = blocks.len();
        let mut row = DMatrix::zeros(kw, nb * kv);
        let mut col = DMatrix::zeros(nb * kw, kv);
        for (i, b) in blocks.iter().enumerate() {
            row.columns_mut(i * kv, kv).copy_from(b);
            col.rows_mut(i * kw, kw).copy_from(b);
        }
        let srow = thin_svd(&row)?;
        let scol = thin_svd(&col)?;
        Ok(Self {
            l,
            ls,
            sv_row: srow.s,
            sv_col: scol.s,
            y: srow.u,
            x: scol.v,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.l[0].shape()
    }

    /// `σ_i/σ_1` for both SVDs.
    pub fn relative_singular_values(&self) -> (Vec<f64>, Vec<f64>) {
        let rel = |s: &[f64]| {
            let s1 = s.first().copied().unwrap_or(0.0);
            s.iter().map(|v| if s1 > 0.0 { v / s1 } else { 0.0 }).collect()
        };
        (rel(&self.sv_row), rel(&self.sv_col))
    }
}

fn project(w: &DMatrix<f64>, m: &SparseMatrix, v: &DMatrix<f64>) -> DMatrix<f64> {
    w.transpose() * m.mul_dense(v)
}

/// `𝕃 = −WᵀEV`, `𝕃_s = −WᵀAV`.
pub fn build_pencil(sys: &PolynomialSystem, v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<LoewnerPencil> {
    if v.ncols() == 0 || w.ncols() == 0 {
        return Err(Error::EmptyBasis);
    }
    LoewnerPencil::from_blocks(vec![-project(w, sys.e(), v)], vec![-project(w, sys.a(), v)])
}

/// Affine blocks, E terms first then A terms, each in declaration order.
pub fn build_pencil_parametric(psys: &AffineParametricSystem, v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<LoewnerPencil> {
    if v.ncols() == 0 || w.ncols() == 0 {
        return Err(Error::EmptyBasis);
    }
    let l = psys.e_terms().iter().map(|t| -project(w, &t.matrix, v)).collect();
    let ls = psys.a_terms().iter().map(|t| -project(w, &t.matrix, v)).collect();
    LoewnerPencil::from_blocks(l, ls)
}

/// Classical SISO Loewner matrices from transfer values; rows follow μ,
/// columns follow σ.
pub fn divided_difference_pencil(
    sigma: &[C64],
    h_sigma: &[C64],
    mu: &[C64],
    h_mu: &[C64],
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    if sigma.len() != h_sigma.len() || mu.len() != h_mu.len() {
        return Err(Error::InvalidInterpolation("point and value counts differ".into()));
    }
    let mut l = DMatrix::zeros(mu.len(), sigma.len());
    let mut ls = DMatrix::zeros(mu.len(), sigma.len());
    for (i, (&m, &hm)) in mu.iter().zip(h_mu).enumerate() {
        for (j, (&s, &hs)) in sigma.iter().zip(h_sigma).enumerate() {
            let d = m - s;
            if d.norm() == 0.0 {
                return Err(Error::InvalidInterpolation(format!("left point {i} coincides with right point {j}")));
            }
            l[(i, j)] = (hm - hs) / d;
            ls[(i, j)] = (m * hm - s * hs) / d;
        }
    }
    Ok((l, ls))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrderSpec {
    Fixed(usize),
    /// Smallest r with `σ_{r+1}/σ_1 < τ` in both SVDs.
    Threshold(f64),
}

impl Default for OrderSpec {
    fn default() -> Self {
        OrderSpec::Threshold(DEFAULT_THRESHOLD)
    }
}

/// Leading `r` singular vector blocks `(Y_r, X_r, r)`.
pub fn select_order(pencil: &LoewnerPencil, order: OrderSpec) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    let available = pencil.y.ncols().min(pencil.x.ncols());
    let r = match order {
        OrderSpec::Fixed(r) => r,
        OrderSpec::Threshold(tau) => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::InvalidArgument(format!("threshold {tau} outside (0, 1)")));
            }
            let count = |s: &[f64]| {
                let s1 = s.first().copied().unwrap_or(0.0);
                s.iter().take_while(|&&v| s1 > 0.0 && v / s1 >= tau).count()
            };
            count(&pencil.sv_row).max(count(&pencil.sv_col)).max(1)
        }
    };
    if r == 0 || r > available {
        return Err(Error::RankExceeded { requested: r, available });
    }
    Ok((pencil.y.columns(0, r).into_owned(), pencil.x.columns(0, r).into_owned(), r))
}

fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).norm()
}

fn orth_exact(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = thin_svd(m)?;
    if svd.s.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::EmptyBasis);
    }
    Ok(svd.u)
}

fn ensure_orthonormal(q: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    let defect = orthonormality_defect(q);
    if defect > 1e-10 {
        warn!("{name} is not orthonormal (defect {defect:.2e}); re-orthonormalizing");
        orth_exact(q)
    } else {
        Ok(q.clone())
    }
}

fn reduce_nonlinearity(h: &Nonlinearity, v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = v.ncols();
    match h {
        Nonlinearity::Hadamard(terms) => {
            let deg = h.degree();
            let mut acc = DMatrix::zeros(w.ncols(), r.pow(deg as u32));
            for t in terms {
                let proj: Vec<DMatrix<f64>> = t.factors.iter().map(|f| f.mul_dense(v)).collect();
                let refs: Vec<&DMatrix<f64>> = proj.iter().collect();
                acc += w.transpose() * row_kron(&refs)? * t.coefficient;
            }
            Ok(acc)
        }
        Nonlinearity::Explicit(t) => {
            let deg = t.degree();
            let cols: Vec<Vec<f64>> = (0..r).map(|j| v.column(j).iter().copied().collect()).collect();
            let width = r.pow(deg as u32);
            let mut full = DMatrix::zeros(v.nrows(), width);
            let mut digits = vec![0; deg];
            for j in 0..width {
                crate::system::decode_index(j, r, &mut digits);
                let slots: Vec<&[f64]> = digits.iter().map(|&d| cols[d].as_slice()).collect();
                full.column_mut(j).copy_from_slice(&t.eval_slots(&slots));
            }
            Ok(w.transpose() * full)
        }
    }
}

fn reduce_input_term(nt: &InputTerm, v: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let r = v.ncols();
    let deg = nt.degree();
    let block = r.pow(deg as u32);
    let cols: Vec<Vec<f64>> = (0..r).map(|j| v.column(j).iter().copied().collect()).collect();
    let mut full = DMatrix::zeros(v.nrows(), nt.inputs() * block);
    let mut digits = vec![0; deg];
    for l in 0..nt.inputs() {
        let slice = nt.slice(l);
        for j in 0..block {
            crate::system::decode_index(j, r, &mut digits);
            let slots: Vec<&[f64]> = digits.iter().map(|&d| cols[d].as_slice()).collect();
            full.column_mut(l * block + j).copy_from_slice(&slice.eval_slots(&slots));
        }
    }
    w.transpose() * full
}

/// Petrov-Galerkin projection with orthonormal `V_eff`, `W_eff`.
pub fn assemble_rom(sys: &PolynomialSystem, v_eff: &DMatrix<f64>, w_eff: &DMatrix<f64>) -> Result<ReducedSystem> {
    if v_eff.ncols() != w_eff.ncols() {
        return Err(Error::DimensionMismatch {
            context: "effective basis widths",
            expected: v_eff.ncols(),
            got: w_eff.ncols(),
        });
    }
    let v = ensure_orthonormal(v_eff, "V_eff")?;
    let w = ensure_orthonormal(w_eff, "W_eff")?;
    let mut rom = ReducedSystem::new(
        project(&w, sys.e(), &v),
        project(&w, sys.a(), &v),
        w.transpose() * sys.b().to_dense(),
        sys.c().mul_dense(&v),
    )?;
    for (k, h) in sys.h_terms() {
        rom = rom.with_h(k, reduce_nonlinearity(h, &v, &w)?)?;
    }
    for (k, nt) in sys.n_terms() {
        rom = rom.with_n(k, reduce_input_term(nt, &v, &w))?;
    }
    let rc = rom.e_rcond();
    if rc < 1e-12 {
        warn!("reduced E is ill-conditioned or singular (rcond {rc:.2e}); the ROM may be unusable");
    }
    Ok(rom)
}

/// Per-affine-term projection of a parametric family.
pub fn assemble_parametric_rom(
    psys: &AffineParametricSystem,
    v_eff: &DMatrix<f64>,
    w_eff: &DMatrix<f64>,
) -> Result<ParametricReducedSystem> {
    let v = ensure_orthonormal(v_eff, "V_eff")?;
    let w = ensure_orthonormal(w_eff, "W_eff")?;
    let proj = |terms: &[AffineTerm<SparseMatrix>]| {
        terms
            .iter()
            .map(|t| AffineTerm::new(t.coefficient.clone(), project(&w, &t.matrix, &v)))
            .collect::<Vec<_>>()
    };
    let mut h = BTreeMap::new();
    for (k, fam) in psys.h_families() {
        let terms = fam
            .iter()
            .map(|t| Ok(AffineTerm::new(t.coefficient.clone(), reduce_nonlinearity(&t.matrix, &v, &w)?)))
            .collect::<Result<Vec<_>>>()?;
        h.insert(k, terms);
    }
    let mut nb = BTreeMap::new();
    for (k, fam) in psys.n_families() {
        let terms = fam
            .iter()
            .map(|t| {
                let nt = InputTerm::new(t.matrix.clone(), psys.m(), k)?;
                Ok(AffineTerm::new(t.coefficient.clone(), reduce_input_term(&nt, &v, &w)))
            })
            .collect::<Result<Vec<_>>>()?;
        nb.insert(k, terms);
    }
    Ok(ParametricReducedSystem {
        e: proj(psys.e_terms()),
        a: proj(psys.a_terms()),
        b: psys
            .b_terms()
            .iter()
            .map(|t| AffineTerm::new(t.coefficient.clone(), w.transpose() * t.matrix.to_dense()))
            .collect(),
        c: psys
            .c_terms()
            .iter()
            .map(|t| AffineTerm::new(t.coefficient.clone(), t.matrix.mul_dense(&v)))
            .collect(),
        h,
        nb,
        param_box: psys.param_box().to_vec(),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ReduceOptions {
    pub order: OrderSpec,
    pub one_sided: bool,
    /// Scale raw basis columns to unit norm before forming the pencil.
    pub normalize: bool,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            order: OrderSpec::default(),
            one_sided: false,
            normalize: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Timings {
    pub stages: Vec<(&'static str, Duration)>,
}

impl Timings {
    fn new() -> Self {
        Self { stages: Vec::new() }
    }

    fn record<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f()?;
        let dt = t0.elapsed();
        info!("{name}: {:.3}s", dt.as_secs_f64());
        self.stages.push((name, dt));
        Ok(out)
    }

    pub fn total(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }
}

#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub raw: RawBases,
    pub pencil: LoewnerPencil,
    pub r: usize,
    pub v_eff: DMatrix<f64>,
    pub w_eff: DMatrix<f64>,
    pub rom: ReducedSystem,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct ParametricReductionResult {
    pub raw: RawBases,
    pub pencil: LoewnerPencil,
    pub r: usize,
    pub v_eff: DMatrix<f64>,
    pub w_eff: DMatrix<f64>,
    pub rom: ParametricReducedSystem,
    pub timings: Timings,
}

fn normalize_columns(m: &mut DMatrix<f64>) {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
}

fn effective_bases(raw: &RawBases, pencil: &LoewnerPencil, order: OrderSpec, one_sided: bool) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    let (y_r, x_r, r) = select_order(pencil, order)?;
    let v_eff = orth_exact(&(&raw.v * x_r))?;
    let w_eff = if one_sided { v_eff.clone() } else { orth_exact(&(&raw.w * y_r))? };
    Ok((v_eff, w_eff, r))
}

fn finish_raw(mut raw: RawBases, opts: &ReduceOptions) -> RawBases {
    if opts.one_sided {
        raw.w = raw.v.clone();
        raw.w_tags = raw.v_tags.clone();
    }
    if opts.normalize {
        normalize_columns(&mut raw.v);
        normalize_columns(&mut raw.w);
    }
    raw
}

/// Bases, pencil, order selection, effective bases, and projection.
pub fn reduce(sys: &PolynomialSystem, iset: &InterpolationSet, opts: &ReduceOptions) -> Result<ReductionResult> {
    let mut timings = Timings::new();
    let model = FullModel::new(sys);
    let raw = timings.record("bases", || match iset.mode {
        InterpMode::Tangential => build_bases_tangential(&model, iset, !opts.one_sided),
        InterpMode::SisoGeneral => build_bases_siso_general(&model, iset, !opts.one_sided),
        InterpMode::ParametricTangential => Err(Error::InvalidInterpolation(
            "parametric interpolation data needs a parametric system".into(),
        )),
    })?;
    let raw = finish_raw(raw, opts);
    let pencil = timings.record("pencil", || build_pencil(sys, &raw.v, &raw.w))?;
    let (v_eff, w_eff, r) = timings.record("order", || effective_bases(&raw, &pencil, opts.order, opts.one_sided))?;
    let rom = timings.record("assemble", || assemble_rom(sys, &v_eff, &w_eff))?;
    Ok(ReductionResult {
        raw,
        pencil,
        r,
        v_eff,
        w_eff,
        rom,
        timings,
    })
}

pub fn reduce_parametric(
    psys: &AffineParametricSystem,
    iset: &InterpolationSet,
    opts: &ReduceOptions,
) -> Result<ParametricReductionResult> {
    let mut timings = Timings::new();
    let raw = timings.record("bases", || build_bases_parametric(psys, iset, !opts.one_sided))?;
    let raw = finish_raw(raw, opts);
    let pencil = timings.record("pencil", || build_pencil_parametric(psys, &raw.v, &raw.w))?;
    let (v_eff, w_eff, r) = timings.record("order", || effective_bases(&raw, &pencil, opts.order, opts.one_sided))?;
    let rom = timings.record("assemble", || assemble_parametric_rom(psys, &v_eff, &w_eff))?;
    Ok(ParametricReductionResult {
        raw,
        pencil,
        r,
        v_eff,
        w_eff,
        rom,
        timings,
    })
}
