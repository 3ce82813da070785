//! Time integration of full, reduced, and hyper-reduced models.

mod dynamics;
mod input;
mod integrator;

use std::fs;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;

pub use dynamics::{Dynamics, Operator};
pub use input::{InputSignal, FHN_STIMULUS_RATE};
pub use integrator::{integrate, IntegratorOptions};

use crate::error::{Error, Result};
use crate::mmio::format_f64;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryStats {
    pub steps: usize,
    pub rejected: usize,
    pub newton_failures: usize,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `outputs[i][k]` is `y_i(times[k])`; NaN after divergence.
    pub outputs: Vec<Vec<f64>>,
    pub diverged: Option<f64>,
    pub stats: TrajectoryStats,
}

impl Trajectory {
    pub fn is_diverged(&self) -> bool {
        self.diverged.is_some()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t");
        for i in 0..self.outputs.len() {
            out.push_str(&format!(",y_{}", i + 1));
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format_f64(*t));
            for o in &self.outputs {
                out.push(',');
                out.push_str(&format_f64(o[k]));
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Same model integrated for several inputs in parallel.
pub fn integrate_batch<M: Dynamics + ?Sized>(
    model: &M,
    inputs: &[InputSignal],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Vec<Trajectory>> {
    inputs.par_iter().map(|u| integrate(model, u, t_end, opts)).collect()
}

#[derive(Clone, Debug)]
pub struct ErrorReport {
    /// Pointwise `|y − ŷ| / max_t |y|` per output.
    pub relative: Vec<Vec<f64>>,
    /// `max_t |y − ŷ| / max_t |y|` per output.
    pub linf: Vec<f64>,
    /// `‖y − ŷ‖₂ / ‖y‖₂` per output over the sample grid.
    pub l2: Vec<f64>,
    pub reference_diverged: Option<f64>,
    pub candidate_diverged: Option<f64>,
}

impl ErrorReport {
    pub fn max_linf(&self) -> f64 {
        self.linf.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_l2(&self) -> f64 {
        self.l2.iter().cloned().fold(0.0, f64::max)
    }

    pub fn any_diverged(&self) -> bool {
        self.reference_diverged.is_some() || self.candidate_diverged.is_some()
    }

    pub fn write_csv(&self, path: &Path, times: &[f64]) -> Result<()> {
        let mut out = String::from("t");
        for i in 0..self.relative.len() {
            out.push_str(&format!(",relerr_{}", i + 1));
        }
        out.push('\n');
        for (k, t) in times.iter().enumerate() {
            out.push_str(&format_f64(*t));
            for r in &self.relative {
                out.push(',');
                out.push_str(&format_f64(r[k]));
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Relative output errors of `candidate` against `reference`. Errors are
/// infinite when either trajectory diverged.
pub fn compare(reference: &Trajectory, candidate: &Trajectory) -> Result<ErrorReport> {
    if reference.times != candidate.times || reference.outputs.len() != candidate.outputs.len() {
        return Err(Error::InvalidArgument("trajectories use different time grids or output counts".into()));
    }
    let diverged = reference.is_diverged() || candidate.is_diverged();
    let mut relative = Vec::new();
    let mut linf = Vec::new();
    let mut l2 = Vec::new();
    for (y, yh) in reference.outputs.iter().zip(&candidate.outputs) {
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff: Vec<f64> = y.iter().zip(yh).map(|(a, b)| (a - b).abs()).collect();
        let rel: Vec<f64> = diff
            .iter()
            .map(|d| if scale > 0.0 { d / scale } else { *d })
            .collect();
        if diverged {
            linf.push(f64::INFINITY);
            l2.push(f64::INFINITY);
        } else {
            linf.push(rel.iter().cloned().fold(0.0, f64::max));
            let num = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            let den = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            l2.push(if den > 0.0 { num / den } else { num });
        }
        relative.push(rel);
    }
    Ok(ErrorReport {
        relative,
        linf,
        l2,
        reference_diverged: reference.diverged,
        candidate_diverged: candidate.diverged,
    })
}
