//! Quadratic-bilinear reformulation of systems with an elementwise cubic
//! nonlinearity through auxiliary states `z_j = x_j²`.

use super::{HadamardTerm, Nonlinearity, PolynomialSystem};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Diagonal of a Hadamard factor restricted to rows where it is diagonal;
/// `None` if some row in `rows` has an off-diagonal entry.
fn diagonal_on_rows(f: &SparseMatrix, rows: impl Iterator<Item = usize>) -> Option<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for i in rows {
        let (cols, vals) = f.row(i);
        match cols {
            [] => out.push((i, 0.0)),
            [j] if *j == i => out.push((i, vals[0])),
            _ => return None,
        }
    }
    Some(out)
}

/// Lifts `E ẋ = A x + H_2(x) + κ∘x∘x∘x + B u` to an equivalent quadratic
/// bilinear system in `[x; z]` with `z_j = x_j²` for every row `j` where the
/// cubic coefficient `κ_j` is nonzero.
///
/// Requirements: diagonal E, no bilinear terms, all H terms in Hadamard
/// form, every H_3 factor diagonal, and every H_2 factor diagonal on the
/// lifted rows.
pub fn lift_cubic_to_qb(sys: &PolynomialSystem) -> Result<PolynomialSystem> {
    let n = sys.n();
    if !sys.e.is_diagonal() {
        return Err(Error::UnsupportedLift("E must be diagonal".into()));
    }
    if sys.nb.iter().next().is_some() {
        return Err(Error::UnsupportedLift("systems with bilinear terms are not supported".into()));
    }
    if sys.h.keys().any(|&k| k > 3) {
        return Err(Error::UnsupportedLift("nonlinearities above degree 3".into()));
    }
    let hadamard = |k: usize| -> Result<&[HadamardTerm]> {
        match sys.h.get(&k) {
            None => Ok(&[]),
            Some(Nonlinearity::Hadamard(t)) => Ok(t),
            Some(Nonlinearity::Explicit(_)) => Err(Error::UnsupportedLift(format!(
                "H_{k} is stored as an explicit unfolding"
            ))),
        }
    };
    let h2 = hadamard(2)?;
    let h3 = hadamard(3)?;
    if h3.is_empty() {
        return Err(Error::UnsupportedLift("no cubic term to lift".into()));
    }

    let mut kappa = vec![0.0; n];
    for t in h3 {
        let mut prod = vec![t.coefficient; n];
        for f in &t.factors {
            let d = diagonal_on_rows(f, 0..n)
                .ok_or_else(|| Error::UnsupportedLift("cubic factor is not diagonal".into()))?;
            for (i, v) in d {
                prod[i] *= v;
            }
        }
        kappa.iter_mut().zip(&prod).for_each(|(k, p)| *k += p);
    }
    let support: Vec<usize> = (0..n).filter(|&i| kappa[i] != 0.0).collect();
    let na = support.len();
    let nq = n + na;
    let z = |k: usize| n + k;

    // Quadratic coefficient of x_j² in H_2 on lifted rows.
    let mut h2_diag = vec![0.0; na];
    for t in h2 {
        let mut prod = vec![t.coefficient; na];
        for f in &t.factors {
            let d = diagonal_on_rows(f, support.iter().copied()).ok_or_else(|| {
                Error::UnsupportedLift("quadratic factor is not diagonal on a lifted row".into())
            })?;
            for (k, (_, v)) in d.into_iter().enumerate() {
                prod[k] *= v;
            }
        }
        h2_diag.iter_mut().zip(&prod).for_each(|(h, p)| *h += p);
    }

    let e_diag = sys.e.diagonal();
    let mut e_qb = e_diag.clone();
    e_qb.extend(support.iter().map(|&j| e_diag[j]));

    let mut a_trip: Vec<(usize, usize, f64)> = sys.a.triplets().collect();
    for (k, &j) in support.iter().enumerate() {
        a_trip.push((z(k), z(k), 2.0 * sys.a.get(j, j)));
    }

    let mut terms: Vec<HadamardTerm> = Vec::new();
    for t in h2 {
        let factors = t
            .factors
            .iter()
            .map(|f| f.embed(nq, nq, 0, 0))
            .collect::<Result<_>>()?;
        terms.push(HadamardTerm::new(t.coefficient, factors)?);
    }
    let pair = |f1: Vec<(usize, usize, f64)>, f2: Vec<(usize, usize, f64)>| -> Result<HadamardTerm> {
        HadamardTerm::new(
            1.0,
            vec![SparseMatrix::from_triplets(nq, nq, f1)?, SparseMatrix::from_triplets(nq, nq, f2)?],
        )
    };
    // κ_i x_i³ = κ_i x_i z_i on the original rows.
    terms.push(pair(
        support.iter().map(|&i| (i, i, kappa[i])).collect(),
        support.iter().enumerate().map(|(k, &i)| (i, z(k), 1.0)).collect(),
    )?);
    // 2 x_j Σ_{l≠j} A_jl x_l on the auxiliary rows.
    let mut off = Vec::new();
    for (k, &j) in support.iter().enumerate() {
        let (cols, vals) = sys.a.row(j);
        off.extend(cols.iter().zip(vals).filter(|(&c, _)| c != j).map(|(&c, &v)| (z(k), c, v)));
    }
    if !off.is_empty() {
        terms.push(pair(
            support.iter().enumerate().map(|(k, &j)| (z(k), j, 2.0)).collect(),
            off,
        )?);
    }
    // 2 x_j H_2(x)_j = 2 h_j x_j z_j.
    if h2_diag.iter().any(|&h| h != 0.0) {
        terms.push(pair(
            support.iter().enumerate().map(|(k, &j)| (z(k), j, 2.0 * h2_diag[k])).collect(),
            (0..na).map(|k| (z(k), z(k), 1.0)).collect(),
        )?);
    }
    // 2 x_j κ_j x_j³ = 2 κ_j z_j².
    terms.push(pair(
        support.iter().enumerate().map(|(k, &j)| (z(k), z(k), 2.0 * kappa[j])).collect(),
        (0..na).map(|k| (z(k), z(k), 1.0)).collect(),
    )?);

    let m = sys.m();
    let mut n_trip = Vec::new();
    for (k, &j) in support.iter().enumerate() {
        let (cols, vals) = sys.b.row(j);
        for (&l, &v) in cols.iter().zip(vals) {
            n_trip.push((z(k), l * nq + j, 2.0 * v));
        }
    }

    let mut out = PolynomialSystem::new(
        SparseMatrix::from_diagonal(&e_qb),
        SparseMatrix::from_triplets(nq, nq, a_trip)?,
        sys.b.embed(nq, m, 0, 0)?,
        sys.c.embed(sys.q(), nq, 0, 0)?,
    )?
    .with_h(2, Nonlinearity::Hadamard(terms))?;
    if !n_trip.is_empty() {
        out = out.with_n(1, SparseMatrix::from_triplets(nq, m * nq, n_trip)?)?;
    }
    Ok(out)
}
