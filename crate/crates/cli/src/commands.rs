use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use polymor::cur::DEFAULT_COLUMN_CAP;
use polymor::interp::{load_interpolation_csv, log_spaced, random_parameters};
use polymor::loewner::{ParametricReductionResult, Timings};
use polymor::mmio::format_f64;
use polymor::sim::TrajectoryStats;
use polymor::system::{load_parametric, load_system, save_parametric, save_system, Manifest};
use polymor::transfer::eval;
use polymor::{
    build_hyper, compare as compare_trajectories, integrate, lift_cubic_to_qb, reduce as reduce_system,
    reduce_parametric, AffineParametricSystem, Benchmark, BenchmarkSpec, Dynamics, FullModel, InputSignal,
    IntegratorOptions, InterpMode, InterpolationSet, LoewnerPencil, Nonlinearity, OrderSpec, ParametricReducedSystem,
    PolynomialSystem, ReduceOptions, ReducedSystem, ReductionResult, Selection, TfKind, Trajectory, C64,
};

use crate::config::RunConfig;

pub enum Model {
    Plain(PolynomialSystem),
    Parametric(AffineParametricSystem),
}

impl Model {
    fn n(&self) -> usize {
        match self {
            Model::Plain(s) => s.n(),
            Model::Parametric(p) => p.n(),
        }
    }

    /// The plain system, or the parametric one frozen at the configured value.
    fn frozen(&self, cfg: &RunConfig) -> Result<PolynomialSystem> {
        match self {
            Model::Plain(s) => Ok(s.clone()),
            Model::Parametric(p) => Ok(p.assemble_at_parameter(&parameter_value(cfg, p.param_box())?)?),
        }
    }
}

fn benchmark_spec(cfg: &RunConfig) -> Result<Option<BenchmarkSpec>> {
    let Some(name) = cfg.benchmark_name()? else {
        return Ok(None);
    };
    let mut spec = BenchmarkSpec::new(name, cfg.grid.unwrap_or(name.default_grid()));
    spec.length = cfg.length;
    spec.epsilon = cfg.epsilon;
    spec.recovery = cfg.recovery;
    Ok(Some(spec))
}

fn load_dir(dir: &Path) -> Result<Model> {
    let man = Manifest::read(dir).with_context(|| format!("reading manifest in {}", dir.display()))?;
    match man.require("kind")? {
        "polynomial" => Ok(Model::Plain(load_system(dir)?)),
        "parametric" => Ok(Model::Parametric(load_parametric(dir, &BTreeMap::new())?)),
        other => bail!("{} holds a {other} model, expected a full system", dir.display()),
    }
}

pub fn load_model(cfg: &RunConfig) -> Result<Model> {
    if let Some(spec) = benchmark_spec(cfg)? {
        return Ok(match spec.build()? {
            Benchmark::Plain(s) => Model::Plain(s),
            Benchmark::Parametric(p) => Model::Parametric(p),
        });
    }
    match &cfg.system {
        Some(dir) => load_dir(dir),
        None => bail!("no full model: pass --benchmark or --system"),
    }
}

fn parameter_box(cfg: &RunConfig, native: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let b: Vec<(f64, f64)> = match &cfg.param_box {
        Some(b) => b.iter().map(|e| (e[0], e[1])).collect(),
        None => native.to_vec(),
    };
    if b.len() != native.len() {
        bail!("parameter box has {} entries, the model has {} parameters", b.len(), native.len());
    }
    Ok(b)
}

/// `--param`, or the midpoint of the parameter box.
fn parameter_value(cfg: &RunConfig, native: &[(f64, f64)]) -> Result<Vec<f64>> {
    match &cfg.param {
        Some(p) if p.len() != native.len() => {
            bail!("--param has {} values, the model has {} parameters", p.len(), native.len())
        }
        Some(p) => Ok(p.clone()),
        None => Ok(parameter_box(cfg, native)?.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()),
    }
}

fn frequencies(cfg: &RunConfig) -> Result<Vec<C64>> {
    let [lo, hi] = cfg.freq.unwrap_or([1e-3, 1e3]);
    Ok(log_spaced(lo, hi, cfg.points)?)
}

fn needs_directions(iset: &InterpolationSet, m: usize, q: usize) -> bool {
    iset.b.iter().any(|b| b.len() != m) || iset.c.iter().any(|c| c.len() != q)
}

pub fn interpolation_set(cfg: &RunConfig, model: &Model) -> Result<InterpolationSet> {
    match model {
        Model::Plain(sys) => {
            let iset = match &cfg.interp {
                Some(path) => load_interpolation_csv(path)?,
                None => InterpolationSet::siso(frequencies(cfg)?),
            };
            if iset.mode == InterpMode::ParametricTangential {
                bail!("interpolation data has parameter columns but the model is not parametric");
            }
            if needs_directions(&iset, sys.m(), sys.q()) {
                return Ok(iset.with_default_directions(&FullModel::new(sys))?);
            }
            Ok(iset)
        }
        Model::Parametric(psys) => {
            let iset = match &cfg.interp {
                Some(path) => load_interpolation_csv(path)?,
                None => {
                    let sigma = frequencies(cfg)?;
                    let count = cfg.param_points.unwrap_or(cfg.points);
                    let p = random_parameters(&parameter_box(cfg, psys.param_box())?, count, cfg.seed);
                    let one = vec![vec![C64::new(1.0, 0.0)]; count];
                    InterpolationSet::parametric(sigma, p, one.clone(), one)
                }
            };
            if iset.mode != InterpMode::ParametricTangential {
                bail!("parametric models need parameter columns in the interpolation data");
            }
            if needs_directions(&iset, psys.m(), psys.q()) {
                return Ok(iset.with_default_directions_parametric(psys)?);
            }
            Ok(iset)
        }
    }
}

fn reduce_options(cfg: &RunConfig, one_sided: bool) -> ReduceOptions {
    ReduceOptions {
        order: cfg.order.map_or(OrderSpec::Threshold(cfg.threshold), OrderSpec::Fixed),
        one_sided,
        ..Default::default()
    }
}

fn integrator_options(cfg: &RunConfig) -> IntegratorOptions {
    IntegratorOptions {
        rtol: cfg.rtol,
        atol: cfg.atol,
        samples: cfg.samples,
        ..Default::default()
    }
}

fn input_signal(cfg: &RunConfig) -> Result<InputSignal> {
    let tag = cfg.input.as_deref().unwrap_or("u1");
    match tag.parse::<InputSignal>() {
        Ok(u) => Ok(u),
        Err(e) => {
            let path = Path::new(tag);
            if path.is_file() {
                Ok(InputSignal::load_table(path)?)
            } else {
                Err(e.into())
            }
        }
    }
}

fn t_end(cfg: &RunConfig) -> f64 {
    cfg.t_end.unwrap_or(5.0)
}

enum Reduced {
    Plain(ReductionResult),
    Parametric(ParametricReductionResult),
}

impl Reduced {
    fn pencil(&self) -> &LoewnerPencil {
        match self {
            Reduced::Plain(r) => &r.pencil,
            Reduced::Parametric(r) => &r.pencil,
        }
    }

    fn r(&self) -> usize {
        match self {
            Reduced::Plain(r) => r.r,
            Reduced::Parametric(r) => r.r,
        }
    }

    fn timings(&self) -> &Timings {
        match self {
            Reduced::Plain(r) => &r.timings,
            Reduced::Parametric(r) => &r.timings,
        }
    }
}

fn run_reduction(model: &Model, iset: &InterpolationSet, opts: &ReduceOptions) -> Result<Reduced> {
    Ok(match model {
        Model::Plain(sys) => Reduced::Plain(reduce_system(sys, iset, opts).context("reduction failed")?),
        Model::Parametric(psys) => {
            Reduced::Parametric(reduce_parametric(psys, iset, opts).context("parametric reduction failed")?)
        }
    })
}

/// CUR evaluators for every Hadamard-form nonlinearity, attached to the ROM.
fn with_cur(sys: &PolynomialSystem, res: &ReductionResult, nc: usize, nr: usize) -> Result<ReducedSystem> {
    let mut rom = res.rom.clone();
    let mut any = false;
    for (k, h) in sys.h_terms() {
        let Nonlinearity::Hadamard(terms) = h else {
            warn!("H_{k} is stored as an explicit unfolding; CUR skipped for it");
            continue;
        };
        let width = res.r.saturating_pow(k as u32);
        let (c, r) = (nc.min(width), nr.min(sys.n()));
        if (c, r) != (nc, nr) {
            info!("CUR sizes for H_{k} clipped to {c} columns, {r} rows");
        }
        let hm = build_hyper(terms, &res.v_eff, &res.w_eff, Some(c), Some(r), Selection::Greedy, DEFAULT_COLUMN_CAP)?;
        rom = rom.with_hyper(hm)?;
        any = true;
    }
    if !any {
        bail!("the model has no Hadamard-form nonlinearity to hyper-reduce");
    }
    Ok(rom)
}

fn write_singular_values(path: &Path, pencil: &LoewnerPencil) -> Result<()> {
    let (row, col) = pencil.relative_singular_values();
    let mut out = String::from("index,sigma_row,sigma_col\n");
    let cell = |v: Option<&f64>| v.map(|x| format_f64(*x)).unwrap_or_default();
    for i in 0..row.len().max(col.len()) {
        writeln!(out, "{},{},{}", i + 1, cell(row.get(i)), cell(col.get(i)))?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_points(path: &Path, iset: &InterpolationSet) -> Result<()> {
    let np = iset.p.as_ref().and_then(|p| p.first()).map_or(0, |p| p.len());
    let mut out = String::from("sigma_re,sigma_im");
    for j in 1..=np {
        write!(out, ",p_{j}")?;
    }
    out.push('\n');
    for (i, s) in iset.sigma.iter().enumerate() {
        write!(out, "{},{}", format_f64(s.re), format_f64(s.im))?;
        if let Some(p) = &iset.p {
            for v in &p[i] {
                write!(out, ",{}", format_f64(*v))?;
            }
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_timings(path: &Path, stages: &[(String, f64)]) -> Result<()> {
    let mut out = String::new();
    for (name, secs) in stages {
        writeln!(out, "{name} {secs:.6}")?;
    }
    let total: f64 = stages.iter().map(|(_, s)| s).sum();
    writeln!(out, "total {total:.6}")?;
    fs::write(path, out)?;
    Ok(())
}

fn stage_list(t: &Timings) -> Vec<(String, f64)> {
    t.stages.iter().map(|(n, d)| (n.to_string(), d.as_secs_f64())).collect()
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.write(&cfg.out)?;
    Ok(cfg.out.clone())
}

pub fn benchmark_gen(cfg: &RunConfig) -> Result<()> {
    let spec = benchmark_spec(cfg)?.context("benchmark gen needs --benchmark")?;
    let out = prepare_out(cfg)?;
    let dir = out.join("system");
    match spec.build()? {
        Benchmark::Plain(s) => save_system(&dir, &s, &spec.manifest_entries())?,
        Benchmark::Parametric(p) => save_parametric(&dir, &p, &spec.manifest_entries())?,
    }
    println!("wrote {} (n = {}) to {}", spec.name, spec.grid, dir.display());
    Ok(())
}

pub fn reduce(cfg: &RunConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let out = prepare_out(cfg)?;
    let iset = interpolation_set(cfg, &model)?;
    write_points(&out.join("points.csv"), &iset)?;
    let res = run_reduction(&model, &iset, &reduce_options(cfg, cfg.one_sided))?;
    let mut stages = stage_list(res.timings());
    let rom_dir = out.join("rom");
    let extra = vec![
        ("projection".to_string(), if cfg.one_sided { "one-sided" } else { "two-sided" }.to_string()),
        ("full_order".to_string(), model.n().to_string()),
    ];
    match (&res, &model) {
        (Reduced::Plain(r), Model::Plain(sys)) => match cfg.cur {
            Some([nc, nr]) => {
                let t0 = Instant::now();
                let rom = with_cur(sys, r, nc, nr)?;
                stages.push(("cur".into(), t0.elapsed().as_secs_f64()));
                rom.save(&rom_dir, &extra)?;
            }
            None => r.rom.save(&rom_dir, &extra)?,
        },
        (Reduced::Parametric(r), _) => {
            if cfg.cur.is_some() {
                bail!("CUR hyper-reduction is not available for parametric models");
            }
            r.rom.save(&rom_dir)?;
        }
        _ => unreachable!("reduction kind follows the model kind"),
    }
    write_singular_values(&out.join("singular_values.csv"), res.pencil())?;
    write_timings(&out.join("timings.txt"), &stages)?;
    println!(
        "reduced n = {} to r = {} ({}); wrote {}",
        model.n(),
        res.r(),
        if cfg.one_sided { "one-sided" } else { "two-sided" },
        rom_dir.display()
    );
    Ok(())
}

/// A model directory opened for simulation: a reduced system, a frozen
/// parametric ROM, or a full system.
enum Candidate {
    Rom(ReducedSystem),
    Full(PolynomialSystem),
}

impl Candidate {
    fn dynamics(&self) -> &dyn Dynamics {
        match self {
            Candidate::Rom(r) => r,
            Candidate::Full(s) => s,
        }
    }
}

fn load_candidate(cfg: &RunConfig, dir: &Path) -> Result<Candidate> {
    let man = Manifest::read(dir).with_context(|| format!("reading manifest in {}", dir.display()))?;
    match man.require("kind")? {
        "parametric-reduced" => {
            let prom = ParametricReducedSystem::load(dir)?;
            let p = parameter_value(cfg, &prom.param_box)?;
            Ok(Candidate::Rom(prom.assemble_at_parameter(&p)?))
        }
        "polynomial" if man.get("reduced") == Some("true") => Ok(Candidate::Rom(ReducedSystem::load(dir)?)),
        "polynomial" | "parametric" => Ok(Candidate::Full(load_dir(dir)?.frozen(cfg)?)),
        other => bail!("unknown model kind {other} in {}", dir.display()),
    }
}

fn write_stats(path: &Path, rows: &[(String, &TrajectoryStats, Option<f64>)]) -> Result<()> {
    let mut out = String::from("model,steps,rejected,newton_failures,diverged_at\n");
    for (name, s, d) in rows {
        let d = d.map(format_f64).unwrap_or_default();
        writeln!(out, "{name},{},{},{},{d}", s.steps, s.rejected, s.newton_failures)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let (name, cand) = match &cfg.rom {
        Some(dir) => ("rom", load_candidate(cfg, dir)?),
        None => ("full", Candidate::Full(load_model(cfg)?.frozen(cfg)?)),
    };
    let out = prepare_out(cfg)?;
    let u = input_signal(cfg)?;
    let tr = integrate(cand.dynamics(), &u, t_end(cfg), &integrator_options(cfg))?;
    tr.write_csv(&out.join("trajectory.csv"))?;
    write_stats(&out.join("stats.csv"), &[(name.into(), &tr.stats, tr.diverged)])?;
    write_timings(&out.join("timings.txt"), &[("integrate".into(), tr.stats.wall.as_secs_f64())])?;
    match tr.diverged {
        Some(t) => println!("{name} model diverged at t = {t}"),
        None => println!("{name} model: {} steps, {} rejected", tr.stats.steps, tr.stats.rejected),
    }
    Ok(())
}

pub fn compare(cfg: &RunConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let full = model.frozen(cfg)?;
    let out = prepare_out(cfg)?;
    let u = input_signal(cfg)?;
    let opts = integrator_options(cfg);
    let t = t_end(cfg);

    let mut candidates: Vec<(String, Option<usize>, Candidate)> = Vec::new();
    let mut stages = Vec::new();
    if let Some(dir) = &cfg.rom {
        let c = load_candidate(cfg, dir)?;
        let r = match &c {
            Candidate::Rom(rom) => Some(rom.r()),
            Candidate::Full(_) => None,
        };
        candidates.push(("rom".into(), r, c));
    } else {
        let iset = interpolation_set(cfg, &model)?;
        for one_sided in [false, true] {
            let side = if one_sided { "one-sided" } else { "two-sided" };
            let res = run_reduction(&model, &iset, &reduce_options(cfg, one_sided))?;
            stages.extend(stage_list(res.timings()).into_iter().map(|(n, s)| (format!("{side}.{n}"), s)));
            match res {
                Reduced::Plain(r) => {
                    if let Some([nc, nr]) = cfg.cur {
                        let t0 = Instant::now();
                        let rom = with_cur(&full, &r, nc, nr)?;
                        stages.push((format!("{side}.cur"), t0.elapsed().as_secs_f64()));
                        candidates.push((format!("{side}-cur"), Some(r.r), Candidate::Rom(rom)));
                    }
                    candidates.push((side.into(), Some(r.r), Candidate::Rom(r.rom)));
                }
                Reduced::Parametric(r) => {
                    if cfg.cur.is_some() {
                        bail!("CUR hyper-reduction is not available for parametric models");
                    }
                    let p = parameter_value(cfg, &r.rom.param_box)?;
                    candidates.push((side.into(), Some(r.r), Candidate::Rom(r.rom.assemble_at_parameter(&p)?)));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.cmp(&b.0));
    }

    let reference = integrate(&full, &u, t, &opts)?;
    stages.push(("simulate.full".into(), reference.stats.wall.as_secs_f64()));
    reference.write_csv(&out.join("full.csv"))?;
    let mut runs: Vec<(String, Option<usize>, Trajectory)> = Vec::new();
    for (name, r, c) in &candidates {
        let tr = integrate(c.dynamics(), &u, t, &opts)?;
        stages.push((format!("simulate.{name}"), tr.stats.wall.as_secs_f64()));
        tr.write_csv(&out.join(format!("{name}.csv")))?;
        runs.push((name.clone(), *r, tr));
    }

    let mut summary = String::from("model,r,linf,l2,diverged\n");
    for (name, r, tr) in &runs {
        let rep = compare_trajectories(&reference, tr)?;
        rep.write_csv(&out.join(format!("{name}_error.csv")), &reference.times)?;
        let r = r.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            summary,
            "{name},{r},{},{},{}",
            format_f64(rep.max_linf()),
            format_f64(rep.max_l2()),
            rep.any_diverged()
        )?;
        println!("{name:>14}  r = {r:>3}  Linf = {:.3e}  L2 = {:.3e}", rep.max_linf(), rep.max_l2());
    }
    fs::write(out.join("summary.csv"), summary)?;
    let mut stats = vec![("full".to_string(), &reference.stats, reference.diverged)];
    stats.extend(runs.iter().map(|(n, _, tr)| (n.clone(), &tr.stats, tr.diverged)));
    write_stats(&out.join("stats.csv"), &stats)?;
    write_timings(&out.join("timings.txt"), &stages)?;
    Ok(())
}

/// Index of the first relative singular value below `tol`.
fn decay_index(sv: &[f64], tol: f64) -> Option<usize> {
    sv.iter().position(|&v| v < tol).map(|i| i + 1)
}

pub fn svd(cfg: &RunConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let out = prepare_out(cfg)?;
    let iset = interpolation_set(cfg, &model)?;
    let opts = ReduceOptions {
        order: OrderSpec::Fixed(1),
        ..reduce_options(cfg, cfg.one_sided)
    };
    let res = run_reduction(&model, &iset, &opts)?;
    write_singular_values(&out.join("singular_values.csv"), res.pencil())?;
    let report = |label: &str, p: &LoewnerPencil| {
        let (row, col) = p.relative_singular_values();
        let fmt = |v: Option<usize>| v.map_or("-".to_string(), |i| i.to_string());
        println!(
            "{label}: {} values; below 1e-6 at index {}, below 1e-10 at index {}",
            row.len().max(col.len()),
            fmt(decay_index(&row, 1e-6).max(decay_index(&col, 1e-6))),
            fmt(decay_index(&row, 1e-10).max(decay_index(&col, 1e-10)))
        );
    };
    report("pencil", res.pencil());
    if cfg.qb {
        let Model::Plain(sys) = &model else {
            bail!("the quadratic-bilinear lift is available for plain systems only");
        };
        let qb = Model::Plain(lift_cubic_to_qb(sys)?);
        let qb_iset = interpolation_set(cfg, &qb)?;
        let qres = run_reduction(&qb, &qb_iset, &opts)?;
        write_singular_values(&out.join("qb_singular_values.csv"), qres.pencil())?;
        report("quadratic-bilinear pencil", qres.pencil());
    }
    Ok(())
}

fn tf_kind(s: &str) -> Result<TfKind> {
    let s = s.trim().to_ascii_lowercase();
    if s == "linear" || s == "l" {
        return Ok(TfKind::Linear);
    }
    let parse = |rest: &str| rest.parse::<usize>().ok().filter(|&k| k >= 1);
    if let Some(k) = s.strip_prefix('h').and_then(parse) {
        return Ok(TfKind::H(k));
    }
    if let Some(k) = s.strip_prefix('n').and_then(parse) {
        return Ok(TfKind::N(k));
    }
    bail!("unknown transfer function kind {s}; use linear, h<k>, or n<k>")
}

pub fn tf(cfg: &RunConfig) -> Result<()> {
    let kind = tf_kind(&cfg.kind)?;
    let full = match (&cfg.benchmark, &cfg.system) {
        (None, None) => None,
        _ => Some(load_model(cfg)?.frozen(cfg)?),
    };
    let rom = match &cfg.rom {
        Some(dir) => match load_candidate(cfg, dir)? {
            Candidate::Rom(r) => Some(r),
            Candidate::Full(_) => bail!("{} is not a reduced model", dir.display()),
        },
        None => None,
    };
    let out = prepare_out(cfg)?;
    let points = match &cfg.interp {
        Some(path) => load_interpolation_csv(path)?.sigma,
        None => frequencies(cfg)?,
    };
    let full_model = full.as_ref().map(FullModel::new);
    let mut header = String::from("s_re,s_im,row,col");
    if full_model.is_some() {
        header.push_str(",full_re,full_im");
    }
    if rom.is_some() {
        header.push_str(",rom_re,rom_im");
    }
    let mut csv = header + "\n";
    let (mut worst, mut worst_abs, mut peak): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &s in &points {
        let tuple = vec![s; kind.arity()];
        let f = full_model.as_ref().map(|m| eval(m, kind, &tuple)).transpose()?;
        let g = rom.as_ref().map(|m| eval(m, kind, &tuple)).transpose()?;
        let shape = f.as_ref().or(g.as_ref()).map(|m| m.shape()).unwrap_or((0, 0));
        if let (Some(f), Some(g)) = (&f, &g) {
            let d = (f - g).norm();
            worst = worst.max(d / f.norm().max(f64::MIN_POSITIVE));
            worst_abs = worst_abs.max(d);
            peak = peak.max(f.norm());
        }
        for j in 0..shape.1 {
            for i in 0..shape.0 {
                write!(csv, "{},{},{},{}", format_f64(s.re), format_f64(s.im), i + 1, j + 1)?;
                for m in [&f, &g].into_iter().flatten() {
                    write!(csv, ",{},{}", format_f64(m[(i, j)].re), format_f64(m[(i, j)].im))?;
                }
                csv.push('\n');
            }
        }
    }
    fs::write(out.join("tf.csv"), csv)?;
    if full_model.is_some() && rom.is_some() {
        println!(
            "{} points, max relative difference {worst:.3e} pointwise, {:.3e} relative to the peak",
            points.len(),
            worst_abs / peak.max(f64::MIN_POSITIVE)
        );
    } else {
        println!("{} points written", points.len());
    }
    Ok(())
}
