use nalgebra::DMatrix;
use polymor::transfer::C64;
use polymor::{HadamardTerm, PolynomialSystem, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One sub-check inside a criterion.
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
    /// `value / tol` for threshold checks.
    pub margin: Option<f64>,
}

impl Check {
    pub fn new(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            pass,
            detail: detail.into(),
            margin: None,
        }
    }

    /// Passes when `value ≤ tol`; NaN fails.
    pub fn at_most(label: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            margin: Some(value / tol),
            ..Self::new(label, value <= tol, format!("{value:.3e} (tol {tol:.0e})"))
        }
    }

    /// Passes when `value ≥ floor`.
    pub fn at_least(label: impl Into<String>, value: f64, floor: f64) -> Self {
        Self {
            margin: Some(floor / value),
            ..Self::new(label, value >= floor, format!("{value:.3e} (min {floor:.3e})"))
        }
    }

    pub fn failed(label: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::new(label, false, format!("error: {err}"))
    }
}

pub fn rel_err(want: &DMatrix<C64>, got: &DMatrix<C64>) -> f64 {
    let scale = want.norm();
    let diff = (want - got).norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn sparse_random(rng: &mut ChaCha8Rng, n: usize, per_row: usize, scale: f64) -> SparseMatrix {
    let mut trip = Vec::new();
    for i in 0..n {
        for _ in 0..per_row {
            trip.push((i, rng.random_range(0..n), rng.random_range(-scale..scale)));
        }
    }
    SparseMatrix::from_triplets(n, n, trip).unwrap()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Splits a term into the average over all factor orderings, which makes
/// its Kronecker form invariant under slot permutations.
fn symmetrize(term: HadamardTerm) -> Vec<HadamardTerm> {
    let perms = permutations(term.degree());
    let c = term.coefficient / perms.len() as f64;
    perms
        .into_iter()
        .map(|p| HadamardTerm::new(c, p.iter().map(|&i| term.factors[i].clone()).collect()).unwrap())
        .collect()
}

/// Stable sparse SISO system with one quadratic, one cubic, and one bilinear
/// term. `A` is strictly diagonally dominant with negative diagonal.
pub fn random_polynomial_system(n: usize, seed: u64, symmetric: bool) -> PolynomialSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, -1.5 - rng.random_range(0.0..2.0)));
        for off in [1usize, 3] {
            if i + off < n {
                trip.push((i, i + off, rng.random_range(-0.4..0.4)));
                trip.push((i + off, i, rng.random_range(-0.4..0.4)));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, trip).unwrap();
    let e = SparseMatrix::from_diagonal(&(0..n).map(|_| rng.random_range(1.0..2.0)).collect::<Vec<_>>());
    let b = SparseMatrix::from_dense(&DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0)));
    let c = SparseMatrix::from_dense(&DMatrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0)));
    let h2 = HadamardTerm::new(0.7, vec![sparse_random(&mut rng, n, 3, 1.0), sparse_random(&mut rng, n, 3, 1.0)]).unwrap();
    let h3 = HadamardTerm::new(
        -0.4,
        vec![
            sparse_random(&mut rng, n, 2, 1.0),
            sparse_random(&mut rng, n, 3, 1.0),
            sparse_random(&mut rng, n, 2, 1.0),
        ],
    )
    .unwrap();
    let n1 = sparse_random(&mut rng, n, 3, 0.5);
    let mut sys = PolynomialSystem::new(e, a, b, c).unwrap().with_n(1, n1).unwrap();
    for term in [h2, h3] {
        let parts = if symmetric { symmetrize(term) } else { vec![term] };
        for t in parts {
            sys = sys.with_hadamard(t).unwrap();
        }
    }
    sys
}

/// Stable sparse linear SISO system.
pub fn random_linear_system(n: usize, rng: &mut ChaCha8Rng) -> PolynomialSystem {
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, -1.0 - rng.random_range(0.0..3.0)));
        if i + 1 < n {
            trip.push((i, i + 1, rng.random_range(-0.5..0.5)));
            trip.push((i + 1, i, rng.random_range(-0.5..0.5)));
        }
    }
    PolynomialSystem::new(
        SparseMatrix::identity(n),
        SparseMatrix::from_triplets(n, n, trip).unwrap(),
        SparseMatrix::from_dense(&DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0))),
        SparseMatrix::from_dense(&DMatrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0))),
    )
    .unwrap()
}
