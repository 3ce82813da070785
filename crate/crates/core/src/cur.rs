//! CUR approximation of the projected nonlinear operator and the sampled
//! evaluator `Ψ·((F̃_1x̂)∘…∘(F̃_ξx̂))`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand_chacha::ChaCha8Rng;

use crate::dense::{pinv, thin_svd, ThinSvd};
use crate::error::{Error, Result};
use crate::kron::row_kron;
use crate::mmio::{read_dense, write_dense};
use crate::system::{HadamardTerm, Manifest};

pub const PINV_TOL: f64 = 1e-12;
pub const DEFAULT_COLUMN_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Greedy,
    /// Leverage-score sampling from the leading right/left singular vectors.
    Leverage { seed: u64 },
}

#[derive(Clone, Debug)]
pub struct CurDecomposition {
    pub cols: Vec<usize>,
    pub rows: Vec<usize>,
    pub u: DMatrix<f64>,
}

impl CurDecomposition {
    pub fn reconstruct(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let c = m.select_columns(&self.cols);
        let r = m.select_rows(&self.rows);
        c * &self.u * r
    }
}

/// Greedy pivoted Gram-Schmidt on the columns of `m`; returns `k` distinct
/// indices in pick order.
fn greedy_columns(m: &DMatrix<f64>, k: usize) -> Vec<usize> {
    let mut work = m.clone();
    let mut picked = Vec::with_capacity(k);
    let mut used = vec![false; m.ncols()];
    for _ in 0..k {
        let (j, norm) = (0..work.ncols())
            .filter(|&j| !used[j])
            .map(|j| (j, work.column(j).norm_squared()))
            .fold((usize::MAX, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        used[j] = true;
        picked.push(j);
        if norm <= 0.0 {
            continue;
        }
        let q = work.column(j) / norm.sqrt();
        let proj = q.transpose() * &work;
        work -= &q * proj;
    }
    picked
}

fn leverage_columns(m: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let svd = thin_svd(m)?;
    let rank = k.min(svd.s.len());
    let mut weights: Vec<f64> = (0..m.ncols())
        .map(|j| (0..rank).map(|l| svd.v[(j, l)].powi(2)).sum::<f64>() + 1e-300)
        .collect();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let j = dist.sample(rng);
        picked.push(j);
        weights[j] = 0.0;
        if weights.iter().all(|&w| w == 0.0) {
            break;
        }
    }
    Ok(picked)
}

/// `M ≈ M(:,J)·U·M(I,:)` with `U = M(:,J)⁺ M M(I,:)⁺`.
pub fn cur_decompose(m: &DMatrix<f64>, n_c: usize, n_r: usize, selection: Selection) -> Result<CurDecomposition> {
    if n_c == 0 || n_c > m.ncols() || n_r == 0 || n_r > m.nrows() {
        return Err(Error::InvalidArgument(format!(
            "CUR sizes ({n_c} columns, {n_r} rows) outside matrix shape {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (cols, rows) = match selection {
        Selection::Greedy => (greedy_columns(m, n_c), greedy_columns(&m.transpose(), n_r)),
        Selection::Leverage { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = leverage_columns(m, n_c, &mut rng)?;
            let r = leverage_columns(&m.transpose(), n_r, &mut rng)?;
            (c, r)
        }
    };
    let c = m.select_columns(&cols);
    let r = m.select_rows(&rows);
    let u = pinv(&c, PINV_TOL)? * m * pinv(&r, PINV_TOL)?;
    Ok(CurDecomposition { cols, rows, u })
}

/// Sampled evaluator for one reduced nonlinearity of degree ξ:
/// `Ψ · Σ_t c_t (F̃_{t,1}x̂ ∘ … ∘ F̃_{t,ξ}x̂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurHyperModel {
    pub degree: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub psi: DMatrix<f64>,
    /// Distinct sampled factors, each `n_r × r`.
    pub factors: Vec<DMatrix<f64>>,
    /// Per Hadamard term: coefficient and factor indices (leftmost first).
    pub terms: Vec<(f64, Vec<usize>)>,
}

fn dedup_factors(per_term: Vec<(f64, Vec<DMatrix<f64>>)>) -> (Vec<DMatrix<f64>>, Vec<(f64, Vec<usize>)>) {
    let mut factors: Vec<DMatrix<f64>> = Vec::new();
    let mut terms = Vec::new();
    for (c, fs) in per_term {
        let idx = fs
            .into_iter()
            .map(|f| match factors.iter().position(|g| *g == f) {
                Some(k) => k,
                None => {
                    factors.push(f);
                    factors.len() - 1
                }
            })
            .collect();
        terms.push((c, idx));
    }
    (factors, terms)
}

fn projected_factors(terms: &[HadamardTerm], v_eff: &DMatrix<f64>) -> Result<Vec<(f64, Vec<DMatrix<f64>>)>> {
    let degree = terms.first().map(|t| t.degree()).ok_or(Error::MissingTerm { kind: "H", degree: 0 })?;
    terms
        .iter()
        .map(|t| {
            if t.degree() != degree {
                return Err(Error::InvalidDegree(t.degree()));
            }
            Ok((t.coefficient, t.factors.iter().map(|f| f.mul_dense(v_eff)).collect()))
        })
        .collect()
}

impl CurHyperModel {
    /// No sampling: all rows, `Ψ = W_effᵀ`, factors `A_j V_eff`. Evaluates the
    /// reduced term through the Hadamard structure instead of Ĥ.
    pub fn exact(terms: &[HadamardTerm], v_eff: &DMatrix<f64>, w_eff: &DMatrix<f64>) -> Result<Self> {
        let per_term = projected_factors(terms, v_eff)?;
        let degree = terms[0].degree();
        let (factors, terms) = dedup_factors(per_term);
        Ok(Self {
            degree,
            rows: (0..v_eff.nrows()).collect(),
            cols: Vec::new(),
            psi: w_eff.transpose(),
            factors,
            terms,
        })
    }

    pub fn r(&self) -> usize {
        self.psi.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.rows.len()
    }

    /// Column `k` holds the `k`-th distinct factor applied to `x`.
    fn sampled(&self, x: &[f64]) -> DMatrix<f64> {
        let xv = nalgebra::DVectorView::from_slice(x, x.len());
        let mut z = DMatrix::zeros(self.rows.len(), self.factors.len());
        for (k, f) in self.factors.iter().enumerate() {
            z.column_mut(k).gemv(1.0, f, &xv, 0.0);
        }
        z
    }

    fn combine(&self, z: &DMatrix<f64>) -> nalgebra::DVector<f64> {
        let p = self.rows.len();
        let mut acc = nalgebra::DVector::zeros(p);
        for (c, idx) in &self.terms {
            for i in 0..p {
                let mut v = *c;
                for &k in idx {
                    v *= z[(i, k)];
                }
                acc[i] += v;
            }
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let acc = self.combine(&self.sampled(x));
        let mut out = nalgebra::DVector::zeros(self.psi.nrows());
        out.gemv(1.0, &self.psi, &acc, 0.0);
        out.data.into()
    }

    /// `∂/∂x̂` of [`Self::eval`], dense `r × r`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let z = self.sampled(x);
        let p = self.rows.len();
        let r = x.len();
        let mut inner = DMatrix::zeros(p, r);
        for (c, idx) in &self.terms {
            for k in 0..idx.len() {
                let scale: Vec<f64> = (0..p)
                    .map(|i| c * idx.iter().enumerate().filter(|&(l, _)| l != k).map(|(_, &f)| z[(i, f)]).product::<f64>())
                    .collect();
                let f = &self.factors[idx[k]];
                for j in 0..r {
                    for i in 0..p {
                        inner[(i, j)] += scale[i] * f[(i, j)];
                    }
                }
            }
        }
        &self.psi * inner
    }

    /// Writes `rows.csv`, `cols.csv`, `psi.mtx`, `factor{k}.mtx`, and a manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n");
        fs::write(dir.join("rows.csv"), join(&self.rows) + "\n")?;
        fs::write(dir.join("cols.csv"), join(&self.cols) + "\n")?;
        write_dense(&dir.join("psi.mtx"), &self.psi)?;
        for (k, f) in self.factors.iter().enumerate() {
            write_dense(&dir.join(format!("factor{k}.mtx")), f)?;
        }
        let mut man = Manifest::new();
        man.set("kind", "cur");
        man.set("degree", self.degree);
        man.set("factors", self.factors.len());
        man.set("terms", self.terms.len());
        for (t, (c, idx)) in self.terms.iter().enumerate() {
            man.set(format!("term{t}.coefficient"), crate::mmio::format_f64(*c));
            man.set(format!("term{t}.factors"), idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","));
        }
        man.write(dir)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let man = Manifest::read(dir)?;
        let read_idx = |name: &str| -> Result<Vec<usize>> {
            fs::read_to_string(dir.join(name))?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.trim().parse().map_err(|_| Error::Parse(format!("bad index in {name}: {l}"))))
                .collect()
        };
        let factors = (0..man.require_usize("factors")?)
            .map(|k| read_dense(&dir.join(format!("factor{k}.mtx"))))
            .collect::<Result<Vec<_>>>()?;
        let terms = (0..man.require_usize("terms")?)
            .map(|t| {
                let c = man.require_f64(&format!("term{t}.coefficient"))?;
                let idx = man
                    .require(&format!("term{t}.factors"))?
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("bad factor index {s}"))))
                    .collect::<Result<Vec<usize>>>()?;
                Ok((c, idx))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = Self {
            degree: man.require_usize("degree")?,
            rows: read_idx("rows.csv")?,
            cols: read_idx("cols.csv")?,
            psi: read_dense(&dir.join("psi.mtx"))?,
            factors,
            terms,
        };
        if model.terms.iter().flat_map(|(_, i)| i).any(|&k| k >= model.factors.len()) {
            return Err(Error::Parse("factor index out of range".into()));
        }
        Ok(model)
    }
}

fn truncated(svd: &ThinSvd) -> usize {
    let smax = svd.s.first().copied().unwrap_or(0.0);
    svd.s.iter().take_while(|&&s| s > 0.0 && s >= PINV_TOL * smax).count()
}

/// `Wᵀ 𝒞 U` with `U = 𝒞⁺ M ℛ⁺`, evaluated as `Wᵀ (𝒞𝒞⁺)(Mℛ⁺)` through
/// orthonormal factors so that ill-conditioned selections do not amplify
/// rounding through the product of two pseudoinverses.
fn stable_psi(op: &DMatrix<f64>, w_eff: &DMatrix<f64>, cur: &CurDecomposition) -> Result<DMatrix<f64>> {
    let svd_c = thin_svd(&op.select_columns(&cur.cols))?;
    let qc = svd_c.u.columns(0, truncated(&svd_c)).into_owned();
    let svd_r = thin_svd(&op.select_rows(&cur.rows))?;
    let kr = truncated(&svd_r);
    let mut mv = op * svd_r.v.columns(0, kr);
    for (j, mut col) in mv.column_iter_mut().enumerate() {
        col /= svd_r.s[j];
    }
    let left = w_eff.transpose() * &qc;
    Ok(left * (qc.transpose() * mv) * svd_r.u.columns(0, kr).transpose())
}

/// Hyper-reduced evaluator from the projected operator
/// `𝒱 = Σ_t c_t row_kron(A_{t,1}V, …, A_{t,ξ}V)`.
pub fn build_hyper(
    terms: &[HadamardTerm],
    v_eff: &DMatrix<f64>,
    w_eff: &DMatrix<f64>,
    n_c: Option<usize>,
    n_r: Option<usize>,
    selection: Selection,
    column_cap: usize,
) -> Result<CurHyperModel> {
    let per_term = projected_factors(terms, v_eff)?;
    let degree = terms[0].degree();
    let r = v_eff.ncols();
    let width = r
        .checked_pow(degree as u32)
        .filter(|&w| w <= column_cap)
        .ok_or(Error::SizeCap {
            what: "projected operator columns (lower r or the degree)",
            needed: r.saturating_pow(degree as u32),
            cap: column_cap,
        })?;
    let mut op = DMatrix::zeros(v_eff.nrows(), width);
    for (c, fs) in &per_term {
        let refs: Vec<&DMatrix<f64>> = fs.iter().collect();
        op += row_kron(&refs)? * *c;
    }
    let default = (6 * r).min(width);
    let n_c = n_c.unwrap_or(default);
    let n_r = n_r.unwrap_or(default.min(v_eff.nrows()));
    let cur = cur_decompose(&op, n_c, n_r, selection)?;
    let psi = stable_psi(&op, w_eff, &cur)?;
    let sampled = per_term
        .into_iter()
        .map(|(c, fs)| (c, fs.into_iter().map(|f| f.select_rows(&cur.rows)).collect()))
        .collect();
    let (factors, terms) = dedup_factors(sampled);
    Ok(CurHyperModel {
        degree,
        rows: cur.rows,
        cols: cur.cols,
        psi,
        factors,
        terms,
    })
}

/// Alias matching the evaluator's role inside integrators.
pub fn hyper_rhs(model: &CurHyperModel, x: &[f64]) -> Vec<f64> {
    model.eval(x)
}
