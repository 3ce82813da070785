use std::time::Instant;

use polymor::interp::log_spaced;
use polymor::transfer::{eval, TfKind, TransferModel, C64};
use polymor::{reduce, FullModel, InterpolationSet, OrderSpec, PolynomialSystem, ReduceOptions};

use crate::common::{random_polynomial_system, rel_err, Check};

const TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const N: usize = 50;

fn value(model: &dyn TransferModel, kind: TfKind, s: &[C64]) -> polymor::Result<C64> {
    Ok(eval(model, kind, s)?[(0, 0)])
}

/// Worst relative mismatch over `tuples`.
fn worst_value(full: &dyn TransferModel, rom: &dyn TransferModel, kind: TfKind, tuples: &[Vec<C64>]) -> polymor::Result<f64> {
    let mut worst = 0.0f64;
    for s in tuples {
        let a = eval(full, kind, s)?;
        let b = eval(rom, kind, s)?;
        worst = worst.max(rel_err(&a, &b));
    }
    Ok(worst)
}

/// Central difference in slot `j`.
fn partial(model: &dyn TransferModel, kind: TfKind, s: &[C64], j: usize) -> polymor::Result<C64> {
    let mut plus = s.to_vec();
    let mut minus = s.to_vec();
    plus[j] += FD_STEP;
    minus[j] -= FD_STEP;
    Ok((value(model, kind, &plus)? - value(model, kind, &minus)?) / (2.0 * FD_STEP))
}

fn worst_partial(full: &dyn TransferModel, rom: &dyn TransferModel, kind: TfKind, tuples: &[Vec<C64>], j: usize) -> polymor::Result<f64> {
    let mut worst = 0.0f64;
    for s in tuples {
        let a = partial(full, kind, s, j)?;
        let b = partial(rom, kind, s, j)?;
        worst = worst.max((a - b).norm() / a.norm());
    }
    Ok(worst)
}

fn kinds(sys: &PolynomialSystem) -> Vec<TfKind> {
    let mut out = vec![TfKind::Linear];
    out.extend(sys.h_terms().map(|(d, _)| TfKind::H(d)));
    out.extend(sys.n_terms().map(|(d, _)| TfKind::N(d)));
    out
}

fn label(kind: TfKind) -> String {
    match kind {
        TfKind::Linear => "F_L".into(),
        TfKind::H(d) => format!("F_H{d}"),
        TfKind::N(d) => format!("F_N{d}"),
    }
}

/// All tuples of length `len` with entries from `pts`.
fn all_tuples(pts: &[C64], len: usize) -> Vec<Vec<C64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                pts.iter().map(move |&p| {
                    let mut t = t.clone();
                    t.push(p);
                    t
                })
            })
            .collect();
    }
    out
}

fn untruncated(sys: &PolynomialSystem, iset: &InterpolationSet, columns: usize) -> polymor::Result<polymor::ReducedSystem> {
    let opts = ReduceOptions {
        order: OrderSpec::Fixed(columns),
        ..Default::default()
    };
    Ok(reduce(sys, iset, &opts)?.rom)
}

/// Diagonal tangential tuples with `σ = μ`, plus Hermite checks. Inner
/// slots of `F_H` only match for slot-symmetric `H`, so `all_slots` is set
/// for symmetrized systems only.
fn tangential(sys: &PolynomialSystem, sigma: &[C64], all_slots: bool, tag: &str, out: &mut Vec<Check>) -> polymor::Result<()> {
    let per_point = 1 + sys.h_terms().count() + sys.n_terms().count();
    let rom = untruncated(sys, &InterpolationSet::siso(sigma.to_vec()), per_point * sigma.len())?;
    let full = FullModel::new(sys);
    for kind in kinds(sys) {
        let tuples: Vec<Vec<C64>> = sigma.iter().map(|&s| vec![s; kind.arity()]).collect();
        out.push(Check::at_most(format!("{tag} {}", label(kind)), worst_value(&full, &rom, kind, &tuples)?, TOL));
        let a = kind.arity();
        let slots: Vec<usize> = if all_slots { (0..a).collect() } else { vec![0, a - 1] };
        for j in slots.into_iter().collect::<std::collections::BTreeSet<_>>() {
            out.push(Check::at_most(
                format!("{tag} d{}/ds{}", label(kind), j + 1),
                worst_partial(&full, &rom, kind, &tuples, j)?,
                FD_TOL,
            ));
        }
    }
    Ok(())
}

/// Distinct right and left points; `full` enumerates every cross tuple.
fn two_point(sys: &PolynomialSystem, sigma: &[C64], mu: &[C64], cross: bool, out: &mut Vec<Check>) -> polymor::Result<()> {
    let mut iset = InterpolationSet::siso_general(sigma.to_vec(), mu.to_vec());
    iset.full_tuples = cross;
    let k = sigma.len();
    let degrees: Vec<usize> = sys.h_terms().map(|(d, _)| d).chain(sys.n_terms().map(|(d, _)| d)).collect();
    let per_point: usize = if cross {
        1 + degrees.iter().map(|&d| k.pow(d as u32)).sum::<usize>()
    } else {
        1 + degrees.len()
    };
    let columns = per_point * k;
    let rom = untruncated(sys, &iset, columns)?;
    let full = FullModel::new(sys);
    let tag = if cross { "cross" } else { "paired" };
    for kind in kinds(sys) {
        let a = kind.arity();
        let (right, left): (Vec<Vec<C64>>, Vec<Vec<C64>>) = if cross {
            let right = all_tuples(sigma, a);
            let left = all_tuples(sigma, a - 1)
                .into_iter()
                .flat_map(|t| {
                    mu.iter().map(move |&b| {
                        let mut t = t.clone();
                        t.push(b);
                        t
                    })
                })
                .collect();
            (right, left)
        } else {
            let right = sigma.iter().map(|&s| vec![s; a]).collect();
            let left = sigma
                .iter()
                .zip(mu)
                .map(|(&s, &b)| {
                    let mut t = vec![s; a - 1];
                    t.push(b);
                    t
                })
                .collect();
            (right, left)
        };
        out.push(Check::at_most(format!("{tag} {} at λ", label(kind)), worst_value(&full, &rom, kind, &right)?, TOL));
        out.push(Check::at_most(format!("{tag} {} at (λ, β)", label(kind)), worst_value(&full, &rom, kind, &left)?, TOL));
    }
    Ok(())
}

pub fn run() -> Vec<Check> {
    let start = Instant::now();
    let sys = random_polynomial_system(N, 2024, false);
    let sym = random_polynomial_system(N, 2024, true);
    let mut out = Vec::new();
    let pts = log_spaced(1e-2, 1e2, 4).unwrap();
    if let Err(e) = tangential(&sys, &pts, false, "diagonal", &mut out) {
        out.push(Check::failed("diagonal", e));
    }
    if let Err(e) = tangential(&sym, &pts, true, "symmetric", &mut out) {
        out.push(Check::failed("symmetric", e));
    }
    let interleaved = log_spaced(1e-2, 1e2, 8).unwrap();
    let sigma: Vec<C64> = interleaved.iter().step_by(2).copied().collect();
    let mu: Vec<C64> = interleaved.iter().skip(1).step_by(2).copied().collect();
    if let Err(e) = two_point(&sys, &sigma, &mu, false, &mut out) {
        out.push(Check::failed("paired", e));
    }
    let (sigma2, mu2) = ([pts[0], pts[2]], [pts[1], pts[3]]);
    if let Err(e) = two_point(&sys, &sigma2, &mu2, true, &mut out) {
        out.push(Check::failed("cross", e));
    }
    let secs = start.elapsed().as_secs_f64();
    out.push(Check::new("runtime", secs < 30.0, format!("{secs:.2}s (limit 30s)")));
    out
}
