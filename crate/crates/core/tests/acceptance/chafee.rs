use std::hint::black_box;
use std::time::Instant;

use nalgebra::DVector;
use polymor::interp::log_spaced;
use polymor::kron::kron_pow;
use polymor::{
    build_hyper, compare, hyper_rhs, integrate, lift_cubic_to_qb, make_chafee, reduce, CurHyperModel, InputSignal,
    IntegratorOptions, InterpolationSet, Nonlinearity, OrderSpec, PolynomialSystem, ReduceOptions, ReductionResult, Selection,
    Trajectory,
};

use crate::common::Check;

const T_END: f64 = 5.0;
const POINTS: usize = 200;

fn reduce_at(sys: &PolynomialSystem, r: usize) -> polymor::Result<ReductionResult> {
    let pts = log_spaced(1e-3, 1e3, POINTS)?;
    let opts = ReduceOptions {
        order: OrderSpec::Fixed(r),
        ..Default::default()
    };
    reduce(sys, &InterpolationSet::siso(pts), &opts)
}

fn qb_options() -> IntegratorOptions {
    IntegratorOptions {
        max_steps: 200_000,
        ..Default::default()
    }
}

/// Criterion 4: r = 2, 6, 10 two-sided cubic ROMs against the full model.
pub fn regression() -> Vec<Check> {
    let run = || -> polymor::Result<Vec<Check>> {
        let sys = make_chafee(100, 1.0)?;
        let opts = IntegratorOptions::default();
        let full = integrate(&sys, &InputSignal::U1, T_END, &opts)?;
        let mut errs = Vec::new();
        for r in [2, 6, 10] {
            let rom = reduce_at(&sys, r)?.rom;
            let tr = integrate(&rom, &InputSignal::U1, T_END, &opts)?;
            errs.push(compare(&full, &tr)?.max_linf());
        }
        let listing = format!("r=2,6,10: {:.2e}, {:.2e}, {:.2e}", errs[0], errs[1], errs[2]);
        Ok(vec![
            Check::at_most("r=10 relative Linf", errs[2], 1e-2),
            Check::new("nonincreasing in r", errs.windows(2).all(|w| w[1] <= w[0]), listing),
        ])
    };
    run().unwrap_or_else(|e| vec![Check::failed("chafee regression", e)])
}

fn dominance_at(k: usize, label: &str) -> polymor::Result<Vec<Check>> {
    let sys = make_chafee(k, 1.0)?;
    let qb = lift_cubic_to_qb(&sys)?;
    let cubic = reduce_at(&sys, 10)?.rom;
    let lifted = reduce_at(&qb, 10)?.rom;
    let mut out = Vec::new();
    for u in [InputSignal::U1, InputSignal::U2] {
        let opts = IntegratorOptions::default();
        let full = integrate(&sys, &u, T_END, &opts)?;
        let ec = compare(&full, &integrate(&cubic, &u, T_END, &opts)?)?.max_l2();
        let eq = compare(&full, &integrate(&lifted, &u, T_END, &qb_options())?)?.max_l2();
        out.push(Check::new(
            format!("{label} {u}: cubic ≤ QB/10"),
            10.0 * ec <= eq,
            format!("cubic {ec:.2e}, QB {eq:.2e}, ratio {:.1e}", eq / ec),
        ));
    }
    Ok(out)
}

/// Criterion 5: cubic versus lifted-QB ROM at r = 10.
pub fn dominance(slow: bool) -> Vec<Check> {
    let mut out = dominance_at(100, "k=100").unwrap_or_else(|e| vec![Check::failed("k=100", e)]);
    if slow {
        out.extend(dominance_at(500, "k=500").unwrap_or_else(|e| vec![Check::failed("k=500", e)]));
    } else {
        out.push(Check::new("k=500", true, "skipped (set POLYMOR_SLOW=1)"));
    }
    out
}

pub struct CurSetup {
    cur: CurHyperModel,
    dense_h3: nalgebra::DMatrix<f64>,
    r: usize,
}

fn cur_setup() -> polymor::Result<(ReductionResult, CurSetup, CurHyperModel)> {
    let sys = make_chafee(100, 1.0)?;
    let res = reduce_at(&sys, 10)?;
    let Some(Nonlinearity::Hadamard(terms)) = sys.h(3) else {
        unreachable!("Chafee cubic term is Hadamard");
    };
    let r = res.r;
    let n = sys.n();
    let cap = polymor::cur::DEFAULT_COLUMN_CAP;
    let full = build_hyper(terms, &res.v_eff, &res.w_eff, Some(r.pow(3)), Some(n), Selection::Greedy, cap)?;
    let cur = build_hyper(terms, &res.v_eff, &res.w_eff, Some(60), Some(60), Selection::Greedy, cap)?;
    let dense_h3 = res.rom.h[&3].clone();
    Ok((res, CurSetup { cur, dense_h3, r }, full))
}

/// Criterion 8 (a), (b). Returns the setup for the timing check.
pub fn cur_accuracy() -> (Vec<Check>, Option<CurSetup>) {
    let run = || -> polymor::Result<(Vec<Check>, CurSetup)> {
        let (res, setup, full) = cur_setup()?;
        let opts = IntegratorOptions::default();
        let u = InputSignal::U1;
        let base: Trajectory = integrate(&res.rom, &u, T_END, &opts)?;
        let nocomp = integrate(&res.rom.clone().with_hyper(full)?, &u, T_END, &opts)?;
        let with_cur = integrate(&res.rom.clone().with_hyper(setup.cur.clone())?, &u, T_END, &opts)?;
        let checks = vec![
            Check::at_most("no compression vs exact ROM", compare(&base, &nocomp)?.max_linf(), 1e-10),
            Check::at_most("CUR 60/60 vs exact ROM, u1", compare(&base, &with_cur)?.max_linf(), 1e-2),
        ];
        Ok((checks, setup))
    };
    match run() {
        Ok((c, s)) => (c, Some(s)),
        Err(e) => (vec![Check::failed("CUR setup", e)], None),
    }
}

const EVALS: usize = 10_000;

/// Criterion 8 (c): best of several rounds of 10⁴ evaluations each.
pub fn cur_speed(setup: &CurSetup) -> Check {
    let xs: Vec<Vec<f64>> = (0..64)
        .map(|k| (0..setup.r).map(|i| ((k * 7 + i * 3) % 11) as f64 / 11.0 - 0.5).collect())
        .collect();
    let time = |f: &dyn Fn(&[f64]) -> f64| {
        let mut best = f64::INFINITY;
        for _ in 0..5 {
            let start = Instant::now();
            let mut acc = 0.0;
            for i in 0..EVALS {
                acc += f(black_box(&xs[i % xs.len()]));
            }
            black_box(acc);
            best = best.min(start.elapsed().as_secs_f64());
        }
        best
    };
    let dense = time(&|x| (&setup.dense_h3 * DVector::from_vec(kron_pow(x, 3).unwrap()))[0]);
    let hyper = time(&|x| hyper_rhs(&setup.cur, x)[0]);
    Check::at_least(format!("dense/hyper time over {EVALS} evals"), dense / hyper, 5.0)
}
