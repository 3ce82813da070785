use nalgebra::DMatrix;
use polymor::kron::{row_kron, ModeUnfolding, UnfoldingData};
use polymor::loewner::assemble_rom;
use polymor::{HadamardTerm, PolynomialSystem, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::common::Check;

const TOL: f64 = 1e-11;
const INSTANCES: usize = 40;

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Dense Kronecker product by explicit index arithmetic.
fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.view_mut((i * b.nrows(), j * b.ncols()), b.shape()).copy_from(&(b * a[(i, j)]));
        }
    }
    out
}

fn kron_list(ms: &[DMatrix<f64>]) -> DMatrix<f64> {
    ms[1..].iter().fold(ms[0].clone(), |acc, m| kron(&acc, m))
}

fn rel(want: &DMatrix<f64>, got: &DMatrix<f64>) -> f64 {
    (want - got).norm() / want.norm().max(f64::MIN_POSITIVE)
}

/// `row_kron(F)·(p_1 ⊗ …) = ∘ F_k p_k` and `row_kron(F)·(⊗ X_k) = row_kron(F_k X_k)`.
fn row_kron_identities(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (mut hadamard, mut product) = (0.0f64, 0.0f64);
    for _ in 0..INSTANCES {
        let n = rng.random_range(1..=10);
        let xi = rng.random_range(2..=3);
        let dims: Vec<usize> = (0..xi).map(|_| rng.random_range(1..=4)).collect();
        let fs: Vec<DMatrix<f64>> = dims.iter().map(|&r| random(rng, n, r)).collect();
        let refs: Vec<&DMatrix<f64>> = fs.iter().collect();
        let rk = row_kron(&refs).unwrap();
        let ps: Vec<DMatrix<f64>> = dims.iter().map(|&r| random(rng, r, 1)).collect();
        let lhs = &rk * kron_list(&ps);
        let mut want = DMatrix::from_element(n, 1, 1.0);
        for (f, p) in fs.iter().zip(&ps) {
            want.component_mul_assign(&(f * p));
        }
        hadamard = hadamard.max(rel(&want, &lhs));

        let xs: Vec<DMatrix<f64>> = dims
            .iter()
            .map(|&r| {
                let c = rng.random_range(1..=3);
                random(rng, r, c)
            })
            .collect();
        let lhs = &rk * kron_list(&xs);
        let fx: Vec<DMatrix<f64>> = fs.iter().zip(&xs).map(|(f, x)| f * x).collect();
        let fx_refs: Vec<&DMatrix<f64>> = fx.iter().collect();
        product = product.max(rel(&row_kron(&fx_refs).unwrap(), &lhs));
    }
    (hadamard, product)
}

/// Entry map of the mode-2 unfolding and the scalar identity
/// `wᵀ M (x_1 ⊗ … ⊗ x_ξ) = x_ξᵀ M₂ (x_1 ⊗ … ⊗ x_{ξ−1} ⊗ w)`.
fn mode2_identities(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (mut entries, mut scalar) = (0.0f64, 0.0f64);
    for _ in 0..INSTANCES {
        let n: usize = rng.random_range(1..=6);
        let xi = rng.random_range(2..=3);
        let width = n.pow(xi as u32);
        let m = random(rng, n, width);
        let u = ModeUnfolding::new(UnfoldingData::Dense(m.clone()), vec![n; xi + 1], 1).unwrap();
        let m2 = u.mode2_from_mode1().unwrap().to_dense();
        let mut expected = DMatrix::zeros(n, width);
        for i in 0..n {
            for j in 0..width {
                // j = (d_1, …, d_ξ), leftmost slowest; M₂ column = (d_1, …, d_{ξ−1}, i).
                let last = j % n;
                let head = j / n;
                expected[(last, head * n + i)] = m[(i, j)];
            }
        }
        entries = entries.max(rel(&expected, &m2));

        let w = random(rng, n, 1);
        let xs: Vec<DMatrix<f64>> = (0..xi).map(|_| random(rng, n, 1)).collect();
        let lhs = (w.transpose() * &m * kron_list(&xs))[(0, 0)];
        let mut slots = xs[..xi - 1].to_vec();
        slots.push(w.clone());
        let rhs = (xs[xi - 1].transpose() * &m2 * kron_list(&slots))[(0, 0)];
        scalar = scalar.max((lhs - rhs).abs() / lhs.abs().max(1e-300));
    }
    (entries, scalar)
}

/// Reduced `Ĥ_ξ` from Hadamard storage against `Wᵀ H (V ⊗ … ⊗ V)`.
fn assembly(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let n: usize = rng.random_range(4..=10);
        let r = rng.random_range(1..=4);
        let xi = rng.random_range(2..=3);
        let factors: Vec<DMatrix<f64>> = (0..xi).map(|_| random(rng, n, n)).collect();
        let coefficient = rng.random_range(-2.0..2.0);
        let sys = PolynomialSystem::new(
            SparseMatrix::identity(n),
            SparseMatrix::from_dense(&random(rng, n, n)),
            SparseMatrix::from_dense(&random(rng, n, 1)),
            SparseMatrix::from_dense(&random(rng, 1, n)),
        )
        .unwrap()
        .with_hadamard(HadamardTerm::new(coefficient, factors.iter().map(SparseMatrix::from_dense).collect()).unwrap())
        .unwrap();
        // Explicit unfolding: row i is c · A_1(i,:) ⊗ … ⊗ A_ξ(i,:).
        let mut h = DMatrix::zeros(n, n.pow(xi as u32));
        for i in 0..n {
            let rows: Vec<DMatrix<f64>> = factors.iter().map(|f| f.rows(i, 1).into_owned()).collect();
            h.row_mut(i).copy_from(&(kron_list(&rows) * coefficient).row(0));
        }
        let v = random(rng, n, r).qr().q();
        let w = random(rng, n, r).qr().q();
        let want = w.transpose() * h * kron_list(&vec![v.clone(); xi]);
        let rom = assemble_rom(&sys, &v, &w).unwrap();
        worst = worst.max(rel(&want, &rom.h[&xi]));
    }
    worst
}

pub fn run() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (had, prod) = row_kron_identities(&mut rng);
    let (entries, scalar) = mode2_identities(&mut rng);
    vec![
        Check::at_most("row_kron Hadamard identity", had, TOL),
        Check::at_most("row_kron product identity", prod, TOL),
        Check::at_most("mode-2 entry map", entries, TOL),
        Check::at_most("mode-2 scalar identity", scalar, TOL),
        Check::at_most("Ĥ assembly vs Kronecker projection", assembly(&mut rng), TOL),
    ]
}
