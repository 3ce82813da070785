//! Fixtures shared by the benchmark targets.

use polymor::interp::log_spaced;
use polymor::{
    build_hyper, make_chafee, reduce, CurHyperModel, InterpolationSet, Nonlinearity, OrderSpec, PolynomialSystem,
    ReduceOptions, ReductionResult, Selection,
};

pub struct ChafeeRom {
    pub sys: PolynomialSystem,
    pub result: ReductionResult,
    pub cur: CurHyperModel,
}

/// Two-sided Chafee ROM of order `r` from 200 points in `[1e-3, 1e3]`, with a
/// CUR evaluator using `samples` columns and rows.
pub fn chafee_rom(k: usize, r: usize, samples: usize) -> ChafeeRom {
    let sys = make_chafee(k, 1.0).expect("valid grid");
    let iset = InterpolationSet::siso(log_spaced(1e-3, 1e3, 200).expect("valid range"));
    let opts = ReduceOptions {
        order: OrderSpec::Fixed(r),
        ..Default::default()
    };
    let result = reduce(&sys, &iset, &opts).expect("reduction");
    let Some(Nonlinearity::Hadamard(terms)) = sys.h(3) else {
        unreachable!("Chafee cubic term is in Hadamard form");
    };
    let cur = build_hyper(
        terms,
        &result.v_eff,
        &result.w_eff,
        Some(samples),
        Some(samples),
        Selection::Greedy,
        polymor::cur::DEFAULT_COLUMN_CAP,
    )
    .expect("CUR");
    ChafeeRom { sys, result, cur }
}

/// Deterministic reduced state with entries of moderate size.
pub fn sample_state(r: usize) -> Vec<f64> {
    (0..r).map(|i| 0.3 * ((i as f64) * 0.7).sin()).collect()
}
