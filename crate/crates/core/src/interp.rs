//! Interpolation data and raw projection bases.

use std::fs;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::thin_svd;
use crate::error::{Error, Result};
use crate::system::AffineParametricSystem;
use crate::transfer::{eval_fl, phi_b, FullModel, TransferModel, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpMode {
    /// Distinct right points σ and left points μ, SISO only.
    SisoGeneral,
    Tangential,
    ParametricTangential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationSet {
    pub sigma: Vec<C64>,
    pub mu: Option<Vec<C64>>,
    pub b: Vec<Vec<C64>>,
    pub c: Vec<Vec<C64>>,
    pub p: Option<Vec<Vec<f64>>>,
    pub mode: InterpMode,
    /// Enumerate all cross-frequency tuples (SISO general mode only).
    pub full_tuples: bool,
}

impl InterpolationSet {
    pub fn tangential(sigma: Vec<C64>, b: Vec<Vec<C64>>, c: Vec<Vec<C64>>) -> Self {
        Self {
            sigma,
            mu: None,
            b,
            c,
            p: None,
            mode: InterpMode::Tangential,
            full_tuples: false,
        }
    }

    /// SISO tangential set with unit directions.
    pub fn siso(sigma: Vec<C64>) -> Self {
        let k = sigma.len();
        Self::tangential(sigma, vec![vec![C64::new(1.0, 0.0)]; k], vec![vec![C64::new(1.0, 0.0)]; k])
    }

    pub fn siso_general(sigma: Vec<C64>, mu: Vec<C64>) -> Self {
        let k = sigma.len();
        Self {
            sigma,
            mu: Some(mu),
            b: vec![vec![C64::new(1.0, 0.0)]; k],
            c: vec![vec![C64::new(1.0, 0.0)]; k],
            p: None,
            mode: InterpMode::SisoGeneral,
            full_tuples: false,
        }
    }

    pub fn parametric(sigma: Vec<C64>, p: Vec<Vec<f64>>, b: Vec<Vec<C64>>, c: Vec<Vec<C64>>) -> Self {
        Self {
            sigma,
            mu: None,
            b,
            c,
            p: Some(p),
            mode: InterpMode::ParametricTangential,
            full_tuples: false,
        }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// True if every non-real point has its conjugate in the set. Bases are
    /// realified either way, which implicitly adds missing conjugates.
    pub fn is_conjugate_closed(&self) -> bool {
        let closed = |pts: &[C64]| {
            pts.iter().all(|s| {
                s.im == 0.0 || pts.iter().any(|t| (t - s.conj()).norm() <= 1e-14 * s.norm().max(1.0))
            })
        };
        closed(&self.sigma) && self.mu.as_deref().is_none_or(closed)
    }

    pub fn validate(&self, m: usize, q: usize) -> Result<()> {
        let k = self.sigma.len();
        if k == 0 {
            return Err(Error::InvalidInterpolation("no interpolation points".into()));
        }
        if self.b.len() != k || self.c.len() != k {
            return Err(Error::InvalidInterpolation(format!(
                "{k} points but {} right and {} left directions",
                self.b.len(),
                self.c.len()
            )));
        }
        for (i, (b, c)) in self.b.iter().zip(&self.c).enumerate() {
            if b.len() != m || c.len() != q {
                return Err(Error::InvalidInterpolation(format!("direction length mismatch at point {i}")));
            }
            if b.iter().all(|v| v.norm() == 0.0) || c.iter().all(|v| v.norm() == 0.0) {
                return Err(Error::ZeroDirection(i));
            }
        }
        match self.mode {
            InterpMode::SisoGeneral => {
                if m != 1 || q != 1 {
                    return Err(Error::InvalidInterpolation("SISO general mode needs m = q = 1".into()));
                }
                let mu = self
                    .mu
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInterpolation("SISO general mode needs left points".into()))?;
                if mu.len() != k {
                    return Err(Error::InvalidInterpolation("left and right point counts differ".into()));
                }
            }
            InterpMode::ParametricTangential => {
                let p = self
                    .p
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInterpolation("parametric mode needs parameter points".into()))?;
                if p.len() != k {
                    return Err(Error::InvalidInterpolation("parameter and frequency counts differ".into()));
                }
            }
            InterpMode::Tangential => {}
        }
        if !self.is_conjugate_closed() {
            log::debug!("interpolation set is not conjugate-closed; realification supplies the conjugates");
        }
        Ok(())
    }

    /// Replaces the directions with the leading singular vectors of
    /// `F_L(σ_i)`: `b_i = v_1`, `c_i = conj(u_1)`.
    pub fn with_default_directions<M: TransferModel + ?Sized>(mut self, model: &M) -> Result<Self> {
        let (b, c) = default_directions(model, &self.sigma)?;
        self.b = b;
        self.c = c;
        Ok(self)
    }

    /// Parametric counterpart of [`Self::with_default_directions`].
    pub fn with_default_directions_parametric(mut self, psys: &AffineParametricSystem) -> Result<Self> {
        let p = self
            .p
            .clone()
            .ok_or_else(|| Error::InvalidInterpolation("parametric mode needs parameter points".into()))?;
        let mut bs = Vec::with_capacity(p.len());
        let mut cs = Vec::with_capacity(p.len());
        for (s, pi) in self.sigma.iter().zip(&p) {
            let sys = psys.assemble_at_parameter(pi)?;
            let (b, c) = default_directions(&FullModel::new(&sys), &[*s])?;
            bs.extend(b);
            cs.extend(c);
        }
        self.b = bs;
        self.c = cs;
        Ok(self)
    }
}

fn default_directions<M: TransferModel + ?Sized>(model: &M, sigma: &[C64]) -> Result<(Vec<Vec<C64>>, Vec<Vec<C64>>)> {
    let one = C64::new(1.0, 0.0);
    if model.m() == 1 && model.q() == 1 {
        return Ok((vec![vec![one]; sigma.len()], vec![vec![one]; sigma.len()]));
    }
    let mut bs = Vec::with_capacity(sigma.len());
    let mut cs = Vec::with_capacity(sigma.len());
    for &s in sigma {
        let f = eval_fl(model, s)?;
        let svd = f.svd(true, true);
        let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        bs.push(vt.row(k).iter().map(|v| v.conj()).collect());
        cs.push(u.column(k).iter().map(|v| v.conj()).collect());
    }
    Ok((bs, cs))
}

/// `count` points logarithmically spaced on the positive real axis.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<C64>> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(Error::InvalidArgument(format!("bad frequency range [{lo}, {hi}] with {count} points")));
    }
    if count == 1 {
        return Ok(vec![C64::new(lo, 0.0)]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..count)
        .map(|i| C64::new(10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64), 0.0))
        .collect())
}

/// Seeded uniform samples from a box.
pub fn random_parameters(param_box: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            param_box
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                .collect()
        })
        .collect()
}

/// Reads `sigma_re, sigma_im, p_1.., b_1.., c_1..` columns (header required).
pub fn load_interpolation_csv(path: &Path) -> Result<InterpolationSet> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty interpolation CSV".into()))?
        .split(',')
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let re = find("sigma_re").ok_or_else(|| Error::Parse("missing sigma_re column".into()))?;
    let im = find("sigma_im");
    let group = |prefix: &str| -> Vec<usize> {
        let mut cols: Vec<(usize, usize)> = header
            .iter()
            .enumerate()
            .filter_map(|(k, h)| h.strip_prefix(prefix).and_then(|r| r.parse::<usize>().ok()).map(|j| (j, k)))
            .collect();
        cols.sort();
        cols.into_iter().map(|(_, k)| k).collect()
    };
    let (pc, bc, cc) = (group("p_"), group("b_"), group("c_"));
    let mut sigma = Vec::new();
    let mut p = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    for line in lines {
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad number in line: {line}"))))
            .collect::<Result<_>>()?;
        if vals.len() != header.len() {
            return Err(Error::Parse(format!("wrong column count in line: {line}")));
        }
        sigma.push(C64::new(vals[re], im.map(|k| vals[k]).unwrap_or(0.0)));
        p.push(pc.iter().map(|&k| vals[k]).collect::<Vec<_>>());
        let dir = |cols: &[usize]| -> Vec<C64> {
            if cols.is_empty() {
                vec![C64::new(1.0, 0.0)]
            } else {
                cols.iter().map(|&k| C64::new(vals[k], 0.0)).collect()
            }
        };
        b.push(dir(&bc));
        c.push(dir(&cc));
    }
    Ok(if pc.is_empty() {
        InterpolationSet::tangential(sigma, b, c)
    } else {
        InterpolationSet::parametric(sigma, p, b, c)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    VL,
    VN,
    VH,
    WL,
    WN,
    WH,
}

/// Origin of one raw basis column.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnTag {
    pub block: Block,
    pub point: usize,
    pub degree: usize,
    pub input: Option<usize>,
    pub imaginary: bool,
    pub sigma: C64,
    pub parameter: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct RawBases {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub v_tags: Vec<ColumnTag>,
    pub w_tags: Vec<ColumnTag>,
}

struct PointColumns {
    v: Vec<(Vec<C64>, ColumnTag)>,
    w: Vec<(Vec<C64>, ColumnTag)>,
}

fn tag(block: Block, point: usize, degree: usize, input: Option<usize>, sigma: C64) -> ColumnTag {
    ColumnTag {
        block,
        point,
        degree,
        input,
        imaginary: false,
        sigma,
        parameter: None,
    }
}

fn solve_columns<M: TransferModel + ?Sized>(
    model: &M,
    s: C64,
    cols: Vec<(Vec<C64>, ColumnTag)>,
    transpose: bool,
) -> Result<Vec<(Vec<C64>, ColumnTag)>> {
    if cols.is_empty() {
        return Ok(cols);
    }
    let n = model.n();
    let flat: Vec<C64> = cols.iter().flat_map(|(v, _)| v.iter().copied()).collect();
    let x = model.phi_solve(s, &DMatrix::from_column_slice(n, cols.len(), &flat), transpose)?;
    Ok(cols
        .into_iter()
        .enumerate()
        .map(|(k, (_, t))| (x.column(k).iter().copied().collect(), t))
        .collect())
}

/// Columns for one diagonal tuple. `Φ(sv)Bb` fills every non-adjoint slot,
/// `Φ(sw)ᵀCᵀc` the adjoint slot, and all outer solves use `sv`.
fn diagonal_point_columns<M: TransferModel + ?Sized>(
    model: &M,
    point: usize,
    sv: C64,
    sw: C64,
    b: &[C64],
    c: &[C64],
    want_w: bool,
) -> Result<PointColumns> {
    let pb = phi_b(model, sv)?;
    let v0: Vec<C64> = (&pb * DVector::from_column_slice(b)).iter().copied().collect();
    let mut v_rhs: Vec<(Vec<C64>, ColumnTag)> = Vec::new();
    for eta in model.n_degrees() {
        let slots = vec![v0.as_slice(); eta];
        for l in 0..model.m() {
            v_rhs.push((model.apply_n(eta, l, &slots)?, tag(Block::VN, point, eta, Some(l), sv)));
        }
    }
    for xi in model.h_degrees() {
        let slots = vec![v0.as_slice(); xi];
        v_rhs.push((model.apply_h(xi, &slots)?, tag(Block::VH, point, xi, None, sv)));
    }
    let mut v = vec![(v0.clone(), tag(Block::VL, point, 1, None, sv))];
    v.extend(solve_columns(model, sv, v_rhs, false)?);

    let mut w = Vec::new();
    if want_w {
        let ct = model.ct_dense() * DVector::from_column_slice(c);
        let w0: Vec<C64> = model
            .phi_solve(sw, &DMatrix::from_column_slice(model.n(), 1, ct.as_slice()), true)?
            .iter()
            .copied()
            .collect();
        let mut w_rhs = Vec::new();
        for eta in model.n_degrees() {
            let slots = vec![v0.as_slice(); eta - 1];
            for l in 0..model.m() {
                w_rhs.push((model.apply_n_adjoint(eta, l, &w0, &slots)?, tag(Block::WN, point, eta, Some(l), sw)));
            }
        }
        for xi in model.h_degrees() {
            let slots = vec![v0.as_slice(); xi - 1];
            w_rhs.push((model.apply_h_adjoint(xi, &w0, &slots)?, tag(Block::WH, point, xi, None, sw)));
        }
        w.push((w0, tag(Block::WL, point, 1, None, sw)));
        w.extend(solve_columns(model, sv, w_rhs, true)?);
    }
    Ok(PointColumns { v, w })
}

/// Splits complex columns into real and imaginary parts; negligible
/// imaginary parts are dropped.
fn realify(cols: Vec<(Vec<C64>, ColumnTag)>, n: usize) -> (DMatrix<f64>, Vec<ColumnTag>) {
    let mut data: Vec<f64> = Vec::new();
    let mut tags = Vec::new();
    for (v, t) in cols {
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        let im: Vec<f64> = v.iter().map(|z| z.im).collect();
        let nre = re.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nim = im.iter().map(|x| x * x).sum::<f64>().sqrt();
        data.extend(&re);
        tags.push(t.clone());
        if nim > 1e-14 * (nre + nim) {
            data.extend(&im);
            tags.push(ColumnTag { imaginary: true, ..t });
        }
    }
    let k = tags.len();
    (DMatrix::from_column_slice(n, k, &data), tags)
}

fn with_point_index(err: Error, point: usize) -> Error {
    match err {
        Error::SingularPencil { s, .. } => Error::SingularPencil { s, point: Some(point) },
        other => other,
    }
}

fn merge(n: usize, per_point: Vec<PointColumns>) -> Result<RawBases> {
    let mut vcols = Vec::new();
    let mut wcols = Vec::new();
    for pc in per_point {
        vcols.extend(pc.v);
        wcols.extend(pc.w);
    }
    let (v, v_tags) = realify(vcols, n);
    let (w, w_tags) = realify(wcols, n);
    if v.iter().chain(w.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInterpolation("non-finite basis entries".into()));
    }
    Ok(RawBases { v, w, v_tags, w_tags })
}

/// Tangential bases with all frequencies in a tuple equal to `σ_i`.
pub fn build_bases_tangential<M: TransferModel + ?Sized>(model: &M, iset: &InterpolationSet, want_w: bool) -> Result<RawBases> {
    iset.validate(model.m(), model.q())?;
    let per_point = (0..iset.len())
        .into_par_iter()
        .map(|i| {
            let s = iset.sigma[i];
            diagonal_point_columns(model, i, s, s, &iset.b[i], &iset.c[i], want_w).map_err(|e| with_point_index(e, i))
        })
        .collect::<Result<Vec<_>>>()?;
    merge(model.n(), per_point)
}

/// SISO bases with distinct right points σ and left points μ.
pub fn build_bases_siso_general<M: TransferModel + ?Sized>(model: &M, iset: &InterpolationSet, want_w: bool) -> Result<RawBases> {
    iset.validate(model.m(), model.q())?;
    let mu = iset.mu.as_ref().expect("validated");
    if iset.full_tuples {
        return build_full_tuples(model, &iset.sigma, mu, want_w);
    }
    let per_point = (0..iset.len())
        .into_par_iter()
        .map(|i| {
            diagonal_point_columns(model, i, iset.sigma[i], mu[i], &iset.b[i], &iset.c[i], want_w)
                .map_err(|e| with_point_index(e, i))
        })
        .collect::<Result<Vec<_>>>()?;
    merge(model.n(), per_point)
}

fn tuples(k: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..k).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn build_full_tuples<M: TransferModel + ?Sized>(model: &M, sigma: &[C64], mu: &[C64], want_w: bool) -> Result<RawBases> {
    let k = sigma.len();
    let n = model.n();
    let d = model.h_degrees().into_iter().chain(model.n_degrees()).max().unwrap_or(1);
    let estimate: usize = (1..=d).map(|j| k.pow(j as u32 + 1)).sum();
    warn!("full cross-frequency tuple enumeration requested: up to {estimate} columns per basis");
    let one = [C64::new(1.0, 0.0)];
    let vfirst: Vec<Vec<C64>> = sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| phi_b(model, s).map(|m| m.column(0).iter().copied().collect()).map_err(|e| with_point_index(e, i)))
        .collect::<Result<_>>()?;
    let ct = model.ct_dense() * DVector::from_column_slice(&one);
    let wfirst: Vec<Vec<C64>> = mu
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            model
                .phi_solve(s, &DMatrix::from_column_slice(n, 1, ct.as_slice()), true)
                .map(|m| m.iter().copied().collect())
                .map_err(|e| with_point_index(e, i))
        })
        .collect::<Result<_>>()?;

    let mut per_point = Vec::with_capacity(k);
    for o in 0..k {
        let mut v_rhs = Vec::new();
        for eta in model.n_degrees() {
            for t in tuples(k, eta) {
                let slots: Vec<&[C64]> = t.iter().map(|&i| vfirst[i].as_slice()).collect();
                v_rhs.push((model.apply_n(eta, 0, &slots)?, tag(Block::VN, o, eta, Some(0), sigma[o])));
            }
        }
        for xi in model.h_degrees() {
            for t in tuples(k, xi) {
                let slots: Vec<&[C64]> = t.iter().map(|&i| vfirst[i].as_slice()).collect();
                v_rhs.push((model.apply_h(xi, &slots)?, tag(Block::VH, o, xi, None, sigma[o])));
            }
        }
        let mut v = vec![(vfirst[o].clone(), tag(Block::VL, o, 1, None, sigma[o]))];
        v.extend(solve_columns(model, sigma[o], v_rhs, false).map_err(|e| with_point_index(e, o))?);
        let mut w = Vec::new();
        if want_w {
            let mut w_rhs = Vec::new();
            for (bi, wb) in wfirst.iter().enumerate() {
                for eta in model.n_degrees() {
                    for t in tuples(k, eta - 1) {
                        let slots: Vec<&[C64]> = t.iter().map(|&i| vfirst[i].as_slice()).collect();
                        w_rhs.push((model.apply_n_adjoint(eta, 0, wb, &slots)?, tag(Block::WN, o, eta, Some(0), mu[bi])));
                    }
                }
                for xi in model.h_degrees() {
                    for t in tuples(k, xi - 1) {
                        let slots: Vec<&[C64]> = t.iter().map(|&i| vfirst[i].as_slice()).collect();
                        w_rhs.push((model.apply_h_adjoint(xi, wb, &slots)?, tag(Block::WH, o, xi, None, mu[bi])));
                    }
                }
            }
            w.push((wfirst[o].clone(), tag(Block::WL, o, 1, None, mu[o])));
            w.extend(solve_columns(model, sigma[o], w_rhs, true).map_err(|e| with_point_index(e, o))?);
        }
        per_point.push(PointColumns { v, w });
    }
    merge(n, per_point)
}

/// Tangential bases for a parametric family; every point uses the system
/// frozen at its own parameter.
pub fn build_bases_parametric(psys: &AffineParametricSystem, iset: &InterpolationSet, want_w: bool) -> Result<RawBases> {
    iset.validate(psys.m(), psys.q())?;
    let ps = iset
        .p
        .as_ref()
        .ok_or_else(|| Error::InvalidInterpolation("parametric mode needs parameter points".into()))?;
    let per_point = (0..iset.len())
        .into_par_iter()
        .map(|i| {
            let sys = psys.assemble_at_parameter(&ps[i])?;
            let model = FullModel::new(&sys).with_parameter_key(&ps[i]);
            let s = iset.sigma[i];
            let mut pc = diagonal_point_columns(&model, i, s, s, &iset.b[i], &iset.c[i], want_w)
                .map_err(|e| with_point_index(e, i))?;
            for (_, t) in pc.v.iter_mut().chain(pc.w.iter_mut()) {
                t.parameter = Some(ps[i].clone());
            }
            Ok(pc)
        })
        .collect::<Result<Vec<_>>>()?;
    merge(psys.n(), per_point)
}

/// Orthonormal basis of the numerical column space of `m`: left singular
/// vectors with `σ ≥ tol·σ_max`.
pub fn orth_trim(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Err(Error::EmptyBasis);
    }
    let svd = thin_svd(m)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    if smax == 0.0 || !smax.is_finite() {
        return Err(Error::EmptyBasis);
    }
    let keep = svd.s.iter().take_while(|&&s| s >= tol * smax).count();
    Ok(svd.u.columns(0, keep).into_owned())
}

pub const DEFAULT_ORTH_TOL: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;
    use crate::system::{HadamardTerm, PolynomialSystem};

    #[test]
    fn log_spacing() {
        let p = log_spaced(1e-2, 1e2, 5).unwrap();
        let want = [1e-2, 1e-1, 1.0, 1e1, 1e2];
        for (a, b) in p.iter().zip(want) {
            assert!((a.re - b).abs() <= 1e-12 * b);
        }
        assert!(log_spaced(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn seeded_parameters_are_reproducible() {
        let a = random_parameters(&[(0.25, 2.0)], 10, 0);
        let b = random_parameters(&[(0.25, 2.0)], 10, 0);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (0.25..=2.0).contains(&p[0])));
    }

    #[test]
    fn orth_trim_examples() {
        let q = DMatrix::<f64>::identity(4, 2);
        let t = orth_trim(&q, DEFAULT_ORTH_TOL).unwrap();
        assert_eq!(t.ncols(), 2);
        assert!((t.transpose() * &t - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
        let v = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let t = orth_trim(&v, DEFAULT_ORTH_TOL).unwrap();
        assert_eq!(t.ncols(), 1);
        assert!((t.column(0).norm() - 1.0).abs() < 1e-14);
        assert!(matches!(orth_trim(&DMatrix::zeros(3, 2), 1e-10), Err(Error::EmptyBasis)));
    }

    #[test]
    fn orth_trim_duplicated_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let base = DMatrix::from_fn(100, 25, |_, _| rng.random_range(-1.0..1.0));
        let mut m = DMatrix::zeros(100, 30);
        m.columns_mut(0, 25).copy_from(&base);
        for k in 0..5 {
            m.column_mut(25 + k).copy_from(&base.column(3 * k));
        }
        let q = orth_trim(&m, DEFAULT_ORTH_TOL).unwrap();
        assert_eq!(q.ncols(), 25);
        assert!((q.transpose() * &q - DMatrix::<f64>::identity(25, 25)).norm() <= 1e-12);
        let resid = &m - &q * (q.transpose() * &m);
        assert!(resid.norm() <= DEFAULT_ORTH_TOL * m.norm() * 10.0);
    }

    fn scalar(v: f64) -> SparseMatrix {
        SparseMatrix::from_diagonal(&[v])
    }

    #[test]
    fn scalar_cubic_basis_is_one_dimensional() {
        let sys = PolynomialSystem::new(scalar(1.0), scalar(-1.0), scalar(1.0), scalar(1.0))
            .unwrap()
            .with_hadamard(HadamardTerm::elementwise(-1.0, 1, 3))
            .unwrap();
        let model = FullModel::new(&sys);
        let raw = build_bases_tangential(&model, &InterpolationSet::siso(vec![C64::new(1.0, 0.0)]), true).unwrap();
        assert_eq!(raw.v.ncols(), 2);
        assert_eq!(raw.v_tags[1].block, Block::VH);
        assert_eq!(orth_trim(&raw.v, DEFAULT_ORTH_TOL).unwrap().ncols(), 1);
    }

    #[test]
    fn complex_points_are_realified() {
        let sys = PolynomialSystem::new(
            SparseMatrix::identity(3),
            SparseMatrix::from_diagonal(&[-1.0, -2.0, -3.0]),
            SparseMatrix::from_triplets(3, 1, [(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0)]).unwrap(),
            SparseMatrix::from_triplets(1, 3, [(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]).unwrap(),
        )
        .unwrap();
        let model = FullModel::new(&sys);
        let s = C64::new(0.5, 2.0);
        let raw = build_bases_tangential(&model, &InterpolationSet::siso(vec![s]), true).unwrap();
        assert_eq!(raw.v.ncols(), 2);
        assert!(raw.v_tags[1].imaginary);
        // The complex column and its conjugate lie in span(V).
        let q = orth_trim(&raw.v, DEFAULT_ORTH_TOL).unwrap().map(|x| C64::new(x, 0.0));
        let z = phi_b(&model, s).unwrap();
        let resid = &z - &q * (q.transpose() * &z);
        assert!(resid.norm() <= 1e-10 * z.norm());
    }

    #[test]
    fn singular_point_reports_index() {
        let sys = PolynomialSystem::new(scalar(1.0), scalar(-1.0), scalar(1.0), scalar(1.0)).unwrap();
        let model = FullModel::new(&sys);
        let iset = InterpolationSet::siso(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        match build_bases_tangential(&model, &iset, true) {
            Err(Error::SingularPencil { point: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_direction_rejected() {
        let sys = PolynomialSystem::new(scalar(1.0), scalar(-1.0), scalar(1.0), scalar(1.0)).unwrap();
        let model = FullModel::new(&sys);
        let iset = InterpolationSet::tangential(vec![C64::new(1.0, 0.0)], vec![vec![C64::new(0.0, 0.0)]], vec![vec![C64::new(1.0, 0.0)]]);
        assert!(matches!(build_bases_tangential(&model, &iset, true), Err(Error::ZeroDirection(0))));
    }

    #[test]
    fn csv_loader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        fs::write(&path, "sigma_re,sigma_im,p_1,b_1,c_1\n1.0,0.0,0.5,1.0,1.0\n2.0,1.0,1.5,1.0,-1.0\n").unwrap();
        let set = load_interpolation_csv(&path).unwrap();
        assert_eq!(set.mode, InterpMode::ParametricTangential);
        assert_eq!(set.sigma[1], C64::new(2.0, 1.0));
        assert_eq!(set.p.as_ref().unwrap()[1], vec![1.5]);
        assert_eq!(set.c[1], vec![C64::new(-1.0, 0.0)]);
    }
}
