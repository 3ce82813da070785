//! Adaptive singly diagonally implicit Runge-Kutta integration with simplified
//! Newton per stage and steps clipped to land on the output grid.

use std::time::Instant;

use log::{debug, warn};
use nalgebra::{Dyn, LU};

use super::dynamics::{Dynamics, Operator};
use super::input::InputSignal;
use super::{Trajectory, TrajectoryStats};
use crate::error::{check_dim, Error, Result};
use crate::linsolve::SparseLu;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Equidistant output samples on `[0, T]`, endpoints included.
    pub samples: usize,
    pub max_steps: usize,
    pub divergence_norm: f64,
    pub initial_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-8,
            samples: 500,
            max_steps: 5_000_000,
            divergence_norm: 1e12,
            initial_step: None,
        }
    }
}

enum Factored {
    Identity,
    Sparse(SparseLu<f64>),
    Dense(LU<f64, Dyn, Dyn>),
}

impl Factored {
    fn new(op: Operator) -> Result<Self> {
        match op {
            Operator::Identity(_) => Ok(Factored::Identity),
            Operator::Sparse(m) => Ok(Factored::Sparse(SparseLu::factor(&m)?)),
            Operator::Dense(m) => Ok(Factored::Dense(m.lu())),
        }
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factored::Identity => Ok(rhs.to_vec()),
            Factored::Sparse(lu) => lu.solve_vec(rhs),
            Factored::Dense(lu) => lu
                .solve(&nalgebra::DVector::from_column_slice(rhs))
                .filter(|x| x.iter().all(|v| v.is_finite()))
                .map(|x| x.as_slice().to_vec())
                .ok_or_else(|| Error::SingularMatrix("Newton iteration matrix".into())),
        }
    }
}

/// L-stable, stiffly accurate SDIRK of order 4 with an embedded order 3 pair.
const GAMMA: f64 = 0.25;
const STAGES: usize = 5;
const A: [[f64; STAGES]; STAGES] = [
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.25, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
];
const C: [f64; STAGES] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0];
const B_HAT: [f64; STAGES] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];
const ERROR_EXPONENT: f64 = 0.25;
const NEWTON_MAX_ITERS: usize = 10;
const NEWTON_TOL: f64 = 1e-2;
const ROUNDING_SLACK: f64 = 16.0;

struct Stepper<'a, M: Dynamics + ?Sized> {
    model: &'a M,
    input: &'a InputSignal,
    mass: Operator,
    rtol: f64,
    atol: f64,
}

enum StepResult {
    Accepted { x: Vec<f64>, err: f64 },
    NewtonFailed,
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

impl<M: Dynamics + ?Sized> Stepper<'_, M> {
    fn weights(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.atol + self.rtol * v.abs()).collect()
    }

    fn wrms(v: &[f64], w: &[f64]) -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        (v.iter().zip(w).map(|(a, b)| (a / b).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }

    /// Weighted max norm, used for step acceptance.
    fn wmax(v: &[f64], w: &[f64]) -> f64 {
        v.iter().zip(w).map(|(a, b)| (a / b).abs()).fold(0.0, f64::max)
    }

    /// Solves `M y − γ·h·f(y, u) = rhs` by simplified Newton from `y`.
    /// Updates at the rounding level of the residual count as converged.
    fn newton(&self, g: &Factored, rhs: &[f64], u: &[f64], h: f64, y: &mut [f64], w: &[f64]) -> Result<Option<Vec<f64>>> {
        let mut prev = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITERS {
            let f = self.model.rhs(y, u)?;
            let my = self.mass.apply(y);
            let res: Vec<f64> = (0..y.len()).map(|i| rhs[i] - my[i] + GAMMA * h * f[i]).collect();
            let delta = g.solve(&res)?;
            if delta.iter().any(|v| !v.is_finite()) {
                return Ok(None);
            }
            axpy(1.0, &delta, y);
            let norm = Self::wrms(&delta, w);
            if norm <= NEWTON_TOL || norm == 0.0 {
                return Ok(Some(self.model.rhs(y, u)?));
            }
            let floor: Vec<f64> = (0..y.len())
                .map(|i| ROUNDING_SLACK * f64::EPSILON * (rhs[i].abs() + my[i].abs() + GAMMA * h * f[i].abs()))
                .collect();
            let noise = Self::wrms(&g.solve(&floor)?, w);
            if norm <= noise {
                return Ok(Some(self.model.rhs(y, u)?));
            }
            if norm > 2.0 * prev {
                return Ok(None);
            }
            prev = norm;
        }
        Ok(None)
    }

    fn step(&self, t: f64, x: &[f64], h: f64) -> Result<StepResult> {
        match self.try_step(t, x, h) {
            Err(Error::SingularMatrix(_)) => Ok(StepResult::NewtonFailed),
            other => other,
        }
    }

    fn try_step(&self, t: f64, x: &[f64], h: f64) -> Result<StepResult> {
        let n = x.len();
        let u0 = self.input.eval(t);
        let f0 = self.model.rhs(x, &u0)?;
        let jac = self.model.jacobian(x, &u0)?;
        let g = Factored::new(self.mass.minus_scaled(GAMMA * h, &jac)?)?;
        let w = self.weights(x);
        let mx = self.mass.apply(x);

        let mut stages: Vec<Vec<f64>> = Vec::with_capacity(STAGES);
        let mut y = x.to_vec();
        axpy(C[0] * h, &g.solve(&f0)?, &mut y);
        for i in 0..STAGES {
            if i > 0 {
                let ratio = C[i] / C[i - 1];
                y.iter_mut().zip(x).for_each(|(yi, xi)| *yi = xi + ratio * (*yi - xi));
            }
            let mut rhs = mx.clone();
            for (j, fj) in stages.iter().enumerate() {
                axpy(h * A[i][j], fj, &mut rhs);
            }
            let u = self.input.eval(t + C[i] * h);
            let Some(f) = self.newton(&g, &rhs, &u, h, &mut y, &w)? else {
                return Ok(StepResult::NewtonFailed);
            };
            stages.push(f);
        }

        let mut est = vec![0.0; n];
        for (i, fi) in stages.iter().enumerate() {
            axpy(h * (A[STAGES - 1][i] - B_HAT[i]), fi, &mut est);
        }
        let err_vec = g.solve(&est)?;
        let wy: Vec<f64> = (0..n).map(|i| self.atol + self.rtol * x[i].abs().max(y[i].abs())).collect();
        let err = Self::wmax(&err_vec, &wy);
        Ok(StepResult::Accepted { x: y, err })
    }
}

/// Integrates from `x(0) = 0` and samples `y` on the output grid.
pub fn integrate<M: Dynamics + ?Sized>(model: &M, input: &InputSignal, t_end: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    check_dim("input signal width", model.inputs(), input.dim())?;
    if !(t_end > 0.0) || opts.samples < 2 {
        return Err(Error::InvalidArgument(format!("bad time grid: T = {t_end}, {} samples", opts.samples)));
    }
    let start = Instant::now();
    let n = model.dim();
    let ns = opts.samples;
    let times: Vec<f64> = (0..ns).map(|i| t_end * i as f64 / (ns - 1) as f64).collect();
    let q = model.outputs();
    let mut outputs = vec![vec![f64::NAN; ns]; q];
    let mut x = vec![0.0; n];
    for (o, v) in outputs.iter_mut().zip(model.output(&x)) {
        o[0] = v;
    }
    let stepper = Stepper {
        model,
        input,
        mass: model.mass(),
        rtol: opts.rtol,
        atol: opts.atol,
    };
    let mut stats = TrajectoryStats::default();
    let mut t = 0.0;
    let mut h = opts.initial_step.unwrap_or(1e-6 * t_end);
    let h_min = 1e-14 * t_end;
    let mut next = 1;
    let mut diverged = None;

    while next < ns {
        if stats.steps + stats.rejected >= opts.max_steps {
            warn!("step budget exhausted at t = {t}");
            diverged = Some(t);
            break;
        }
        let target = times[next];
        let remaining = target - t;
        let clipped = h >= remaining;
        let h_try = if clipped { remaining } else { h };
        match stepper.step(t, &x, h_try)? {
            StepResult::NewtonFailed => {
                stats.rejected += 1;
                stats.newton_failures += 1;
                h = h_try * 0.25;
            }
            StepResult::Accepted { x: y, err } => {
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-ERROR_EXPONENT)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    stats.steps += 1;
                    x = y;
                    t = if clipped { target } else { t + h_try };
                    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if !norm.is_finite() || norm > opts.divergence_norm {
                        debug!("state norm {norm:e} at t = {t}");
                        diverged = Some(t);
                        break;
                    }
                    if clipped {
                        for (o, v) in outputs.iter_mut().zip(model.output(&x)) {
                            o[next] = v;
                        }
                        next += 1;
                        h = h.max(h_try * factor);
                    } else {
                        h = h_try * factor;
                    }
                } else {
                    stats.rejected += 1;
                    h = h_try * factor.min(0.9);
                }
            }
        }
        if h < h_min {
            warn!("step size underflow at t = {t}");
            diverged = Some(t);
            break;
        }
    }
    stats.wall = start.elapsed();
    Ok(Trajectory {
        times,
        outputs,
        diverged,
        stats,
    })
}
