use nalgebra::DMatrix;
use polymor::interp::{log_spaced, orth_trim, random_parameters, DEFAULT_ORTH_TOL};
use polymor::transfer::C64;
use polymor::{
    build_hyper, compare, integrate, lift_cubic_to_qb, make_chafee, make_chafee_parametric, make_fhn, reduce, reduce_parametric,
    FullModel, InputSignal, IntegratorOptions, InterpolationSet, Nonlinearity, OrderSpec, PolynomialSystem, ReduceOptions,
    ReducedSystem, Selection,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::common::Check;

const FD_STEP: f64 = 1e-6;
const JAC_TOL: f64 = 1e-6;
const ORTH_TOL: f64 = 1e-12;

/// `‖J − J_fd‖_F / ‖J‖_F` with central differences.
fn jacobian_defect(rhs: &dyn Fn(&[f64]) -> Vec<f64>, jac: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut fd = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += FD_STEP;
        xm[j] -= FD_STEP;
        let (fp, fm) = (rhs(&xp), rhs(&xm));
        for i in 0..n {
            fd[(i, j)] = (fp[i] - fm[i]) / (2.0 * FD_STEP);
        }
    }
    (jac - fd).norm() / jac.norm()
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn full_defect(sys: &PolynomialSystem, rng: &mut ChaCha8Rng) -> polymor::Result<f64> {
    let x = random_state(rng, sys.n());
    let u: Vec<f64> = (0..sys.m()).map(|_| rng.random_range(0.0..1.0)).collect();
    let jac = sys.jacobian(&x, &u)?.to_dense();
    Ok(jacobian_defect(&|y| sys.rhs(y, &u).unwrap(), &jac, &x))
}

fn rom_defect(rom: &ReducedSystem, rng: &mut ChaCha8Rng) -> polymor::Result<f64> {
    let x = random_state(rng, rom.r());
    let u: Vec<f64> = (0..rom.m()).map(|_| rng.random_range(0.0..1.0)).collect();
    let jac = rom.jacobian(&x, &u)?;
    Ok(jacobian_defect(&|y| rom.rhs(y, &u).unwrap(), &jac, &x))
}

fn defect(q: &DMatrix<f64>) -> f64 {
    (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).norm()
}

fn siso(lo: f64, hi: f64, count: usize) -> polymor::Result<InterpolationSet> {
    Ok(InterpolationSet::siso(log_spaced(lo, hi, count)?))
}

fn fixed(r: usize, one_sided: bool) -> ReduceOptions {
    ReduceOptions {
        order: OrderSpec::Fixed(r),
        one_sided,
        ..Default::default()
    }
}

fn jacobians(out: &mut Vec<Check>) -> polymor::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let chafee = make_chafee(50, 1.0)?;
    let psys = make_chafee_parametric(50, 1.0)?;
    let fhn = make_fhn(25)?;
    let mut systems: Vec<(String, PolynomialSystem)> = vec![
        ("chafee n=50".into(), chafee.clone()),
        ("fhn n=50".into(), fhn),
        ("chafee QB n=50".into(), lift_cubic_to_qb(&make_chafee(25, 1.0)?)?),
        ("fhn QB n=48".into(), lift_cubic_to_qb(&make_fhn(16)?)?),
    ];
    for p in [0.25, 1.0, 2.0] {
        systems.push((format!("chafee-param p={p}"), psys.assemble_at_parameter(&[p])?));
    }
    for (label, sys) in &systems {
        out.push(Check::at_most(format!("jacobian {label}"), full_defect(sys, &mut rng)?, JAC_TOL));
    }
    let res = reduce(&chafee, &siso(1e-3, 1e3, 20)?, &fixed(6, false))?;
    out.push(Check::at_most("jacobian chafee ROM r=6", rom_defect(&res.rom, &mut rng)?, JAC_TOL));
    let Some(Nonlinearity::Hadamard(terms)) = chafee.h(3) else {
        unreachable!("Chafee cubic term is Hadamard");
    };
    let hyper = build_hyper(terms, &res.v_eff, &res.w_eff, Some(30), Some(30), Selection::Greedy, polymor::cur::DEFAULT_COLUMN_CAP)?;
    let hrom = res.rom.clone().with_hyper(hyper)?;
    out.push(Check::at_most("jacobian chafee CUR ROM r=6", rom_defect(&hrom, &mut rng)?, JAC_TOL));
    Ok(())
}

fn self_convergence(out: &mut Vec<Check>) -> polymor::Result<()> {
    let psys = make_chafee_parametric(50, 1.0)?;
    let cases: Vec<(&str, PolynomialSystem, InputSignal, f64)> = vec![
        ("chafee n=50", make_chafee(50, 1.0)?, InputSignal::U1, 5.0),
        ("chafee-param p=0.25 n=50", psys.assemble_at_parameter(&[0.25])?, InputSignal::U2, 5.0),
        ("fhn n=50", make_fhn(25)?, InputSignal::fhn(), 10.0),
    ];
    for (label, sys, u, t_end) in cases {
        for loose in [1e-6, 1e-7, 1e-8] {
            let run = |tol: f64| {
                let opts = IntegratorOptions {
                    rtol: tol,
                    atol: tol,
                    ..Default::default()
                };
                integrate(&sys, &u, t_end, &opts)
            };
            let diff = compare(&run(loose / 10.0)?, &run(loose)?)?.max_linf();
            out.push(Check::at_most(format!("self-convergence {label} tol {loose:.0e}→{:.0e}", loose / 10.0), diff, 100.0 * loose));
        }
    }
    Ok(())
}

fn orthonormality(out: &mut Vec<Check>) -> polymor::Result<()> {
    let chafee = make_chafee(50, 1.0)?;
    let mut bases: Vec<(String, DMatrix<f64>)> = Vec::new();
    for one_sided in [false, true] {
        let res = reduce(&chafee, &siso(1e-3, 1e3, 40)?, &fixed(8, one_sided))?;
        bases.push((format!("chafee V_eff one_sided={one_sided}"), res.v_eff));
        bases.push((format!("chafee W_eff one_sided={one_sided}"), res.w_eff));
    }
    let fhn = make_fhn(25)?;
    let pts = log_spaced(1e-2, 1e2, 30)?;
    let k = pts.len();
    let iset = InterpolationSet::tangential(pts, vec![vec![C64::new(1.0, 0.0); 2]; k], vec![vec![C64::new(1.0, 0.0); 2]; k])
        .with_default_directions(&FullModel::new(&fhn))?;
    let res = reduce(&fhn, &iset, &fixed(10, false))?;
    bases.push(("fhn V_eff".into(), res.v_eff));
    bases.push(("fhn W_eff".into(), res.w_eff));
    let psys = make_chafee_parametric(50, 1.0)?;
    let sigma = log_spaced(1e-3, 1e3, 40)?;
    let one = vec![vec![C64::new(1.0, 0.0)]; sigma.len()];
    let piset = InterpolationSet::parametric(sigma, random_parameters(psys.param_box(), 40, 0), one.clone(), one);
    let pres = reduce_parametric(&psys, &piset, &fixed(5, false))?;
    bases.push(("parametric V_eff".into(), pres.v_eff));
    bases.push(("parametric W_eff".into(), pres.w_eff));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut m = DMatrix::from_fn(100, 30, |_, _| rng.random_range(-1.0..1.0));
    for j in 0..5 {
        let c = m.column(j).into_owned();
        m.set_column(25 + j, &c);
    }
    bases.push(("orth_trim rank 25".into(), orth_trim(&m, DEFAULT_ORTH_TOL)?));
    for (label, q) in &bases {
        out.push(Check::at_most(format!("orthonormality {label}"), defect(q), ORTH_TOL));
    }
    Ok(())
}

pub fn run() -> Vec<Check> {
    let mut out = Vec::new();
    for (label, f) in [
        ("jacobians", jacobians as fn(&mut Vec<Check>) -> polymor::Result<()>),
        ("self-convergence", self_convergence),
        ("orthonormality", orthonormality),
    ] {
        if let Err(e) = f(&mut out) {
            out.push(Check::failed(label, e));
        }
    }
    out
}
