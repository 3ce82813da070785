use polymor::interp::log_spaced;
use polymor::transfer::C64;
use polymor::{
    compare, integrate, lift_cubic_to_qb, make_fhn, reduce, FullModel, InputSignal, IntegratorOptions, InterpolationSet,
    LoewnerPencil, OrderSpec, PolynomialSystem, ReduceOptions, ReductionResult, Trajectory,
};

use crate::common::Check;

const T_END: f64 = 10.0;
const SECTION_AFTER: f64 = 2.0;

/// Upward crossings of `v = mean(v)` for `t > 2`.
fn section_crossings(tr: &Trajectory) -> usize {
    let idx: Vec<usize> = (0..tr.times.len()).filter(|&k| tr.times[k] > SECTION_AFTER).collect();
    let v = &tr.outputs[0];
    let level = idx.iter().map(|&k| v[k]).sum::<f64>() / idx.len() as f64;
    idx.windows(2).filter(|w| v[w[0]] < level && v[w[1]] >= level).count()
}

fn reduce_fhn(sys: &PolynomialSystem, r: usize, one_sided: bool) -> polymor::Result<ReductionResult> {
    let pts = log_spaced(1e-2, 1e2, 200)?;
    let k = pts.len();
    let placeholder = vec![vec![C64::new(1.0, 0.0); sys.m()]; k];
    let iset = InterpolationSet::tangential(pts, placeholder, vec![vec![C64::new(1.0, 0.0); sys.q()]; k])
        .with_default_directions(&FullModel::new(sys))?;
    let opts = ReduceOptions {
        order: OrderSpec::Fixed(r),
        one_sided,
        ..Default::default()
    };
    reduce(sys, &iset, &opts)
}

/// Indices with cubic relative singular value in `[1e-12, 1e-2]` where
/// the cubic curve lies above the QB curve.
fn sv_violations(cubic: &LoewnerPencil, qb: &LoewnerPencil) -> (usize, usize) {
    let (cr, cc) = cubic.relative_singular_values();
    let (qr, qc) = qb.relative_singular_values();
    let mut checked = 0;
    let mut bad = 0;
    for (c, q) in [(cr, qr), (cc, qc)] {
        for (a, b) in c.iter().zip(&q) {
            if (1e-12..=1e-2).contains(a) {
                checked += 1;
                if a > b {
                    bad += 1;
                }
            }
        }
    }
    (bad, checked)
}

pub fn run() -> Vec<Check> {
    let go = || -> polymor::Result<Vec<Check>> {
        let sys = make_fhn(100)?;
        let qb = lift_cubic_to_qb(&sys)?;
        let u = InputSignal::fhn();
        let opts = IntegratorOptions::default();
        let qb_opts = IntegratorOptions {
            max_steps: 200_000,
            ..opts
        };
        let mut out = Vec::new();

        let full = integrate(&sys, &u, T_END, &opts)?;
        let crossings = section_crossings(&full);
        out.push(Check::new("full model limit cycle", crossings >= 2, format!("{crossings} section crossings")));

        let one20 = reduce_fhn(&sys, 20, true)?;
        let tr = integrate(&one20.rom, &u, T_END, &opts)?;
        let crossings = if tr.is_diverged() { 0 } else { section_crossings(&tr) };
        out.push(Check::new(
            "(a) one-sided cubic r=20 non-divergent",
            !tr.is_diverged(),
            format!("L2 {:.2e}", compare(&full, &tr)?.max_l2()),
        ));
        out.push(Check::new("(a) limit-cycle proxy", crossings >= 2, format!("{crossings} section crossings")));

        let two6 = reduce_fhn(&sys, 6, false)?;
        let one6 = reduce_fhn(&sys, 6, true)?;
        let qb_one20 = reduce_fhn(&qb, 20, true)?;
        let qb_two = reduce_fhn(&qb, 6, false)?;
        for (label, cubic, lifted) in [("two-sided", &two6.pencil, &qb_two.pencil), ("one-sided", &one20.pencil, &qb_one20.pencil)] {
            let (bad, checked) = sv_violations(cubic, lifted);
            out.push(Check::new(
                format!("(b) {label} cubic SV below QB"),
                bad == 0 && checked > 0,
                format!("{bad} of {checked} indices above"),
            ));
        }

        let e_qb = compare(&full, &integrate(&qb_one20.rom, &u, T_END, &qb_opts)?)?.max_l2();
        for (label, res) in [("two-sided", &two6), ("one-sided", &one6)] {
            let e = compare(&full, &integrate(&res.rom, &u, T_END, &opts)?)?.max_l2();
            out.push(Check::new(
                format!("(c) {label} cubic r=6 ≤ one-sided QB r=20"),
                e <= e_qb,
                format!("cubic {e:.2e}, QB {e_qb:.2e}"),
            ));
        }
        Ok(out)
    };
    go().unwrap_or_else(|e| vec![Check::failed("FHN", e)])
}
