use nalgebra::DMatrix;
use polymor::interp::build_bases_siso_general;
use polymor::loewner::{build_pencil, divided_difference_pencil};
use polymor::transfer::{eval_fl, C64};
use polymor::{FullModel, InterpolationSet, PolynomialSystem, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::common::{random_linear_system, Check};

const TOL: f64 = 1e-10;

/// Largest entrywise relative deviation.
fn entrywise(want: &DMatrix<C64>, got: &DMatrix<f64>) -> f64 {
    want.iter()
        .zip(got.iter())
        .map(|(a, &b)| (a - b).norm() / a.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn log_uniform(rng: &mut ChaCha8Rng, count: usize) -> Vec<C64> {
    (0..count).map(|_| C64::new(10f64.powf(rng.random_range(-2.0..2.0)), 0.0)).collect()
}

fn one_system(sys: &PolynomialSystem, sigma: &[C64], mu: &[C64]) -> polymor::Result<(f64, f64)> {
    let model = FullModel::new(sys);
    let raw = build_bases_siso_general(&model, &InterpolationSet::siso_general(sigma.to_vec(), mu.to_vec()), true)?;
    let pencil = build_pencil(sys, &raw.v, &raw.w)?;
    let hs: Vec<C64> = sigma.iter().map(|&s| eval_fl(&model, s).map(|m| m[(0, 0)])).collect::<polymor::Result<_>>()?;
    let hm: Vec<C64> = mu.iter().map(|&s| eval_fl(&model, s).map(|m| m[(0, 0)])).collect::<polymor::Result<_>>()?;
    let (l, ls) = divided_difference_pencil(sigma, &hs, mu, &hm)?;
    Ok((entrywise(&l, &pencil.l[0]), entrywise(&ls, &pencil.ls[0])))
}

pub fn run() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut wl, mut wls) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let sys = random_linear_system(30, &mut rng);
        let sigma = log_uniform(&mut rng, 4);
        // Divided differences lose accuracy as |μ − σ| shrinks.
        let mu = loop {
            let mu = log_uniform(&mut rng, 4);
            if mu.iter().all(|m| sigma.iter().all(|s| (m - s).norm() >= 0.05 * m.norm().max(s.norm()))) {
                break mu;
            }
        };
        match one_system(&sys, &sigma, &mu) {
            Ok((a, b)) => {
                wl = wl.max(a);
                wls = wls.max(b);
            }
            Err(e) => out.push(Check::failed(format!("system {k}"), e)),
        }
    }
    out.push(Check::at_most("L over 20 systems", wl, TOL));
    out.push(Check::at_most("Ls over 20 systems", wls, TOL));

    // ẋ = −x + u, y = x, σ = 1, μ = 2.
    let one = |v: f64| SparseMatrix::from_diagonal(&[v]);
    let scalar = PolynomialSystem::new(one(1.0), one(-1.0), one(1.0), one(1.0)).unwrap();
    let model = FullModel::new(&scalar);
    match build_bases_siso_general(&model, &InterpolationSet::siso_general(vec![C64::new(1.0, 0.0)], vec![C64::new(2.0, 0.0)]), true)
        .and_then(|raw| build_pencil(&scalar, &raw.v, &raw.w))
    {
        Ok(p) => {
            out.push(Check::at_most("scalar L = -1/6", (p.l[0][(0, 0)] + 1.0 / 6.0).abs(), TOL));
            out.push(Check::at_most("scalar Ls = 1/6", (p.ls[0][(0, 0)] - 1.0 / 6.0).abs(), TOL));
        }
        Err(e) => out.push(Check::failed("scalar", e)),
    }
    out
}
