//! Finite-difference benchmark systems: Chafee-Infante (plain and with a
//! reaction parameter) and FitzHugh-Nagumo.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sim::InputSignal;
use crate::sparse::SparseMatrix;
use crate::system::{AffineParametricSystem, AffineTerm, Coefficient, HadamardTerm, PolynomialSystem};

pub const FHN_EPSILON: f64 = 0.015;
/// Domain `[0, 1]`, matching the boundary condition at `x = 1`.
pub const FHN_LENGTH: f64 = 1.0;
/// Recovery coupling `h`.
pub const FHN_H: f64 = 0.5;
pub const FHN_GAMMA: f64 = 2.0;
pub const FHN_Q: f64 = 0.05;
pub const CHAFEE_PARAM_BOX: (f64, f64) = (0.25, 2.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FhnParams {
    pub epsilon: f64,
    pub length: f64,
    pub h: f64,
    pub gamma: f64,
    pub q: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self {
            epsilon: FHN_EPSILON,
            length: FHN_LENGTH,
            h: FHN_H,
            gamma: FHN_GAMMA,
            q: FHN_Q,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchmarkName {
    Chafee,
    ChafeeParam,
    Fhn,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 3] = [BenchmarkName::Chafee, BenchmarkName::ChafeeParam, BenchmarkName::Fhn];

    pub fn default_grid(self) -> usize {
        match self {
            BenchmarkName::Chafee | BenchmarkName::ChafeeParam => 500,
            BenchmarkName::Fhn => 100,
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self {
            BenchmarkName::Chafee | BenchmarkName::ChafeeParam => 5.0,
            BenchmarkName::Fhn => 10.0,
        }
    }

    pub fn default_input(self) -> InputSignal {
        match self {
            BenchmarkName::Chafee | BenchmarkName::ChafeeParam => InputSignal::U1,
            BenchmarkName::Fhn => InputSignal::fhn(),
        }
    }

    pub fn default_freq_range(self) -> (f64, f64) {
        match self {
            BenchmarkName::Chafee | BenchmarkName::ChafeeParam => (1e-3, 1e3),
            BenchmarkName::Fhn => (1e-2, 1e2),
        }
    }

    pub fn is_parametric(self) -> bool {
        self == BenchmarkName::ChafeeParam
    }
}

impl FromStr for BenchmarkName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chafee" => Ok(BenchmarkName::Chafee),
            "chafee-param" => Ok(BenchmarkName::ChafeeParam),
            "fhn" => Ok(BenchmarkName::Fhn),
            other => Err(Error::Parse(format!("unknown benchmark {other}"))),
        }
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchmarkName::Chafee => "chafee",
            BenchmarkName::ChafeeParam => "chafee-param",
            BenchmarkName::Fhn => "fhn",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub name: BenchmarkName,
    pub grid: usize,
    /// Domain length; `None` uses the benchmark's own.
    pub length: Option<f64>,
    /// FitzHugh-Nagumo ε override.
    pub epsilon: Option<f64>,
    /// FitzHugh-Nagumo recovery coupling override.
    pub recovery: Option<f64>,
}

pub enum Benchmark {
    Plain(PolynomialSystem),
    Parametric(AffineParametricSystem),
}

impl BenchmarkSpec {
    pub fn new(name: BenchmarkName, grid: usize) -> Self {
        Self {
            name,
            grid,
            length: None,
            epsilon: None,
            recovery: None,
        }
    }

    pub fn build(&self) -> Result<Benchmark> {
        match self.name {
            BenchmarkName::Chafee => make_chafee(self.grid, self.length.unwrap_or(1.0)).map(Benchmark::Plain),
            BenchmarkName::ChafeeParam => {
                make_chafee_parametric(self.grid, self.length.unwrap_or(1.0)).map(Benchmark::Parametric)
            }
            BenchmarkName::Fhn => make_fhn_with(self.grid, &self.fhn_params()).map(Benchmark::Plain),
        }
    }

    pub fn fhn_params(&self) -> FhnParams {
        let d = FhnParams::default();
        FhnParams {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            length: self.length.unwrap_or(d.length),
            h: self.recovery.unwrap_or(d.h),
            ..d
        }
    }

    /// Manifest entries describing the generator choices.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("benchmark".to_string(), self.name.to_string()),
            ("grid".to_string(), self.grid.to_string()),
        ];
        match self.name {
            BenchmarkName::Chafee | BenchmarkName::ChafeeParam => {
                out.push(("length".into(), self.length.unwrap_or(1.0).to_string()));
                out.push(("output".into(), "v(x=L)".into()));
                if self.name.is_parametric() {
                    out.push(("param_box".into(), format!("{},{}", CHAFEE_PARAM_BOX.0, CHAFEE_PARAM_BOX.1)));
                }
            }
            BenchmarkName::Fhn => {
                let p = self.fhn_params();
                out.push(("length".into(), p.length.to_string()));
                out.push(("epsilon".into(), p.epsilon.to_string()));
                out.push(("recovery".into(), p.h.to_string()));
                out.push(("gamma".into(), p.gamma.to_string()));
                out.push(("source".into(), p.q.to_string()));
                out.push(("output".into(), "v(x=0),w(x=0)".into()));
                out.push(("inputs".into(), "i0,constant source".into()));
            }
        }
        out
    }
}

fn check_grid(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("grid needs at least 3 nodes, got {k}")));
    }
    Ok(())
}

/// Second-difference operator on nodes `x_i = i·h, i = 1..k`, Dirichlet at 0
/// (eliminated) and a mirrored ghost node at `x = L`.
fn chafee_diffusion(k: usize, h: f64) -> Result<SparseMatrix> {
    let s = 1.0 / (h * h);
    let mut t = Vec::with_capacity(3 * k);
    for i in 0..k {
        t.push((i, i, -2.0 * s));
        if i > 0 {
            t.push((i, i - 1, if i == k - 1 { 2.0 * s } else { s }));
        }
        if i + 1 < k {
            t.push((i, i + 1, s));
        }
    }
    SparseMatrix::from_triplets(k, k, t)
}

fn chafee_io(k: usize, h: f64) -> Result<(SparseMatrix, SparseMatrix)> {
    let b = SparseMatrix::from_triplets(k, 1, [(0, 0, 1.0 / (h * h))])?;
    let c = SparseMatrix::from_triplets(1, k, [(0, k - 1, 1.0)])?;
    Ok((b, c))
}

/// `v_t = v_xx + v − v³`, `v(0) = u`, `v_x(L) = 0`, `y = v(L)`.
pub fn make_chafee(k: usize, length: f64) -> Result<PolynomialSystem> {
    check_grid(k)?;
    let h = length / k as f64;
    let d = chafee_diffusion(k, h)?;
    let a = d.add(&SparseMatrix::identity(k))?;
    let (b, c) = chafee_io(k, h)?;
    PolynomialSystem::new(SparseMatrix::identity(k), a, b, c)?.with_hadamard(HadamardTerm::elementwise(-1.0, k, 3))
}

/// `v_t = v_xx + p·v − v³` with `p ∈ [0.25, 2]`.
pub fn make_chafee_parametric(k: usize, length: f64) -> Result<AffineParametricSystem> {
    check_grid(k)?;
    let h = length / k as f64;
    let d = chafee_diffusion(k, h)?;
    let (b, c) = chafee_io(k, h)?;
    AffineParametricSystem::new(
        vec![AffineTerm::constant(SparseMatrix::identity(k))],
        vec![
            AffineTerm::constant(d),
            AffineTerm::new(Coefficient::Param(0), SparseMatrix::identity(k)),
        ],
        vec![AffineTerm::constant(b)],
        vec![AffineTerm::constant(c)],
        vec![CHAFEE_PARAM_BOX],
    )?
    .with_h(
        3,
        vec![AffineTerm::constant(crate::system::Nonlinearity::Hadamard(vec![
            HadamardTerm::elementwise(-1.0, k, 3),
        ]))],
    )
}

pub fn make_fhn(k: usize) -> Result<PolynomialSystem> {
    make_fhn_with(k, &FhnParams::default())
}

/// FitzHugh-Nagumo on `k` nodes of `[0, L]`:
/// `ε v_t = ε² v_xx + v(v − 0.1)(1 − v) − w + q`, `w_t = h v − γ w + q`,
/// `v_x(0) = −i₀`, `v_x(L) = 0`. States `[v; w]`, inputs `[i₀, 1]`, outputs
/// `v` and `w` at `x = 0`.
pub fn make_fhn_with(k: usize, params: &FhnParams) -> Result<PolynomialSystem> {
    check_grid(k)?;
    let FhnParams { epsilon: eps, length, h, gamma, q } = *params;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let n = 2 * k;
    let dx = length / (k - 1) as f64;
    let s = eps / (dx * dx);
    let mut t = Vec::with_capacity(6 * k);
    for i in 0..k {
        t.push((i, i, -2.0 * s - 0.1 / eps));
        if i > 0 {
            t.push((i, i - 1, if i == k - 1 { 2.0 * s } else { s }));
        }
        if i + 1 < k {
            t.push((i, i + 1, if i == 0 { 2.0 * s } else { s }));
        }
        t.push((i, k + i, -1.0 / eps));
        t.push((k + i, i, h));
        t.push((k + i, k + i, -gamma));
    }
    let a = SparseMatrix::from_triplets(n, n, t)?;
    let mut bt = vec![(0, 0, 2.0 * eps / dx)];
    for i in 0..k {
        bt.push((i, 1, q / eps));
        bt.push((k + i, 1, q));
    }
    let b = SparseMatrix::from_triplets(n, 2, bt)?;
    let c = SparseMatrix::from_triplets(2, n, [(0, 0, 1.0), (1, k, 1.0)])?;
    let mut sel = vec![0.0; n];
    sel[..k].iter_mut().for_each(|v| *v = 1.0);
    let pv = SparseMatrix::from_diagonal(&sel);
    PolynomialSystem::new(SparseMatrix::identity(n), a, b, c)?
        .with_hadamard(HadamardTerm::new(1.1 / eps, vec![pv.clone(), pv.clone()])?)?
        .with_hadamard(HadamardTerm::new(-1.0 / eps, vec![pv.clone(), pv.clone(), pv])?)
}
