use polymor::interp::{log_spaced, random_parameters};
use polymor::transfer::C64;
use polymor::{compare, integrate, make_chafee_parametric, reduce_parametric, InputSignal, IntegratorOptions, InterpolationSet, OrderSpec, ReduceOptions};

use crate::common::Check;

const T_END: f64 = 5.0;
const TOL: f64 = 5e-2;

pub fn run() -> Vec<Check> {
    let go = || -> polymor::Result<Vec<Check>> {
        let psys = make_chafee_parametric(100, 1.0)?;
        let sigma = log_spaced(1e-3, 1e3, 200)?;
        let p = random_parameters(psys.param_box(), 200, 0);
        let one = vec![vec![C64::new(1.0, 0.0)]; sigma.len()];
        let iset = InterpolationSet::parametric(sigma, p, one.clone(), one);
        let opts = ReduceOptions {
            order: OrderSpec::Fixed(5),
            ..Default::default()
        };
        let res = reduce_parametric(&psys, &iset, &opts)?;
        let mut out = Vec::new();
        let int = IntegratorOptions::default();
        for pv in [0.25, 1.0, 2.0] {
            let sys = psys.assemble_at_parameter(&[pv])?;
            let rom = res.rom.assemble_at_parameter(&[pv])?;
            for u in [InputSignal::U1, InputSignal::U2] {
                let full = integrate(&sys, &u, T_END, &int)?;
                let red = integrate(&rom, &u, T_END, &int)?;
                let err = compare(&full, &red)?;
                out.push(Check::new(format!("p={pv} {u} non-divergent"), !red.is_diverged(), ""));
                out.push(Check::at_most(format!("p={pv} {u} relative Linf"), err.max_linf(), TOL));
            }
        }
        Ok(out)
    };
    go().unwrap_or_else(|e| vec![Check::failed("parametric", e)])
}
