//! Run configuration: defaults, an optional JSON file, then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use polymor::system::Manifest;
use polymor::{BenchmarkName, InputSignal};
use serde::{Deserialize, Serialize};

pub const CONFIG_FILE: &str = "config.json";

/// Every setting a subcommand can read. Written verbatim to the output
/// directory after defaults are resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub benchmark: Option<String>,
    pub system: Option<PathBuf>,
    pub rom: Option<PathBuf>,
    pub grid: Option<usize>,
    pub length: Option<f64>,
    pub epsilon: Option<f64>,
    pub recovery: Option<f64>,
    pub freq: Option<[f64; 2]>,
    pub points: usize,
    /// CSV of interpolation data; replaces `freq` and `points` when set.
    pub interp: Option<PathBuf>,
    pub param_points: Option<usize>,
    pub param_box: Option<Vec<[f64; 2]>>,
    /// Parameter value for simulation and transfer evaluation of parametric models.
    pub param: Option<Vec<f64>>,
    pub order: Option<usize>,
    pub threshold: f64,
    pub one_sided: bool,
    pub cur: Option<[usize; 2]>,
    pub qb: bool,
    pub kind: String,
    pub input: Option<String>,
    pub t_end: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            benchmark: None,
            system: None,
            rom: None,
            grid: None,
            length: None,
            epsilon: None,
            recovery: None,
            freq: None,
            points: 200,
            interp: None,
            param_points: None,
            param_box: None,
            param: None,
            order: None,
            threshold: polymor::loewner::DEFAULT_THRESHOLD,
            one_sided: false,
            cur: None,
            qb: false,
            kind: "linear".into(),
            input: None,
            t_end: None,
            rtol: 1e-8,
            atol: 1e-8,
            samples: 500,
            seed: 0,
            out: PathBuf::from("polymor-out"),
        }
    }
}

/// Flags shared by all subcommands. Unset flags leave the file or default
/// value in place.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// JSON configuration file; flags take precedence over its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in benchmark: chafee, chafee-param, fhn.
    #[arg(long)]
    pub benchmark: Option<String>,
    /// System directory written by `benchmark gen` or a compatible tool.
    #[arg(long, value_name = "DIR")]
    pub system: Option<PathBuf>,
    /// Reduced model directory written by `reduce`.
    #[arg(long, value_name = "DIR")]
    pub rom: Option<PathBuf>,
    /// Spatial grid points of the benchmark.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Domain length of the benchmark.
    #[arg(long)]
    pub length: Option<f64>,
    /// FitzHugh-Nagumo ε.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// FitzHugh-Nagumo recovery coupling.
    #[arg(long)]
    pub recovery: Option<f64>,
    /// Frequency range for log-spaced interpolation points.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub freq: Option<Vec<f64>>,
    /// Number of interpolation points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Interpolation data CSV with `sigma_re`, optional `sigma_im`, `p_<j>`, `b_<j>`, `c_<j>` columns.
    #[arg(long, value_name = "FILE")]
    pub interp: Option<PathBuf>,
    /// Number of sampled parameter values, paired with the frequencies.
    #[arg(long)]
    pub param_points: Option<usize>,
    /// Parameter box, one `LO HI` pair per parameter.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], action = clap::ArgAction::Append, allow_negative_numbers = true)]
    pub param_box: Option<Vec<f64>>,
    /// Parameter value for parametric models.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub param: Option<Vec<f64>>,
    /// Fixed reduced order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Relative singular value threshold used when no order is given.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Galerkin projection (W = V).
    #[arg(long)]
    pub one_sided: bool,
    /// CUR hyper-reduction with the given column and row counts.
    #[arg(long, num_args = 2, value_names = ["NC", "NR"])]
    pub cur: Option<Vec<usize>>,
    /// Also process the quadratic-bilinear lift.
    #[arg(long)]
    pub qb: bool,
    /// Transfer function: linear, h<k>, n<k>.
    #[arg(long)]
    pub kind: Option<String>,
    /// Input signal tag (u1, u2, fhn, fhn-i0:<rate>, const:<v,...>, zero:<m>) or a CSV path.
    #[arg(long)]
    pub input: Option<String>,
    /// Final simulation time.
    #[arg(long = "t-end", value_name = "T")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Output samples on [0, T].
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Defaults, then the file named by `--config`, then the flags.
    pub fn assemble(command: &str, flags: &Flags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.command = command.to_string();
        let f = flags.clone();
        if f.benchmark.is_some() {
            cfg.system = None;
        }
        if f.system.is_some() {
            cfg.benchmark = None;
        }
        set(&mut cfg.benchmark, f.benchmark.map(Some));
        set(&mut cfg.system, f.system.map(Some));
        set(&mut cfg.rom, f.rom.map(Some));
        set(&mut cfg.grid, f.grid.map(Some));
        set(&mut cfg.length, f.length.map(Some));
        set(&mut cfg.epsilon, f.epsilon.map(Some));
        set(&mut cfg.recovery, f.recovery.map(Some));
        set(&mut cfg.freq, f.freq.map(|v| Some([v[0], v[1]])));
        set(&mut cfg.points, f.points);
        set(&mut cfg.interp, f.interp.map(Some));
        set(&mut cfg.param_points, f.param_points.map(Some));
        set(
            &mut cfg.param_box,
            f.param_box.map(|v| Some(v.chunks(2).map(|c| [c[0], c[1]]).collect())),
        );
        set(&mut cfg.param, f.param.map(Some));
        set(&mut cfg.order, f.order.map(Some));
        set(&mut cfg.threshold, f.threshold);
        cfg.one_sided |= f.one_sided;
        set(&mut cfg.cur, f.cur.map(|v| Some([v[0], v[1]])));
        cfg.qb |= f.qb;
        set(&mut cfg.kind, f.kind);
        set(&mut cfg.input, f.input.map(Some));
        set(&mut cfg.t_end, f.t_end.map(Some));
        set(&mut cfg.rtol, f.rtol);
        set(&mut cfg.atol, f.atol);
        set(&mut cfg.samples, f.samples);
        set(&mut cfg.seed, f.seed);
        set(&mut cfg.out, f.out);
        Ok(cfg)
    }

    pub fn benchmark_name(&self) -> Result<Option<BenchmarkName>> {
        self.benchmark.as_deref().map(|b| b.parse().map_err(anyhow::Error::from)).transpose()
    }

    /// Benchmark whose defaults apply: the named one, or the one recorded in
    /// a generated system's manifest.
    fn defaults_source(&self) -> Result<Option<BenchmarkName>> {
        if let Some(b) = self.benchmark_name()? {
            return Ok(Some(b));
        }
        for dir in [&self.system, &self.rom].into_iter().flatten() {
            if let Ok(man) = Manifest::read(dir) {
                if let Some(b) = man.get("benchmark") {
                    return Ok(Some(b.parse()?));
                }
            }
        }
        Ok(None)
    }

    /// Fills benchmark-dependent defaults and checks consistency.
    pub fn resolve(mut self) -> Result<Self> {
        let source = self.defaults_source()?;
        if let Some(b) = self.benchmark_name()? {
            self.grid.get_or_insert(b.default_grid());
        }
        let (lo, hi) = source.map_or((1e-3, 1e3), |b| b.default_freq_range());
        self.freq.get_or_insert([lo, hi]);
        self.t_end.get_or_insert(source.map_or(5.0, |b| b.default_t_end()));
        self.input
            .get_or_insert_with(|| source.map_or(InputSignal::U1, |b| b.default_input()).to_string());
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let needs_model = self.command != "benchmark gen";
        match (&self.benchmark, &self.system) {
            (Some(_), Some(_)) => bail!("give either a benchmark or a system directory, not both"),
            (None, None) if needs_model && self.rom.is_none() => bail!("no model: pass --benchmark, --system, or --rom"),
            (None, _) if self.command == "benchmark gen" => bail!("benchmark gen needs --benchmark"),
            _ => {}
        }
        self.benchmark_name()?;
        if let Some(k) = self.grid {
            if k < 3 {
                bail!("grid needs at least 3 points, got {k}");
            }
        }
        let [lo, hi] = self.freq.unwrap_or([1.0, 2.0]);
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            bail!("frequency range must satisfy 0 < lo <= hi, got [{lo}, {hi}]");
        }
        if self.points == 0 {
            bail!("need at least one interpolation point");
        }
        if let Some(n) = self.param_points {
            if n != self.points {
                bail!("--param-points ({n}) must equal --points ({}); frequencies and parameters are paired", self.points);
            }
        }
        for b in self.param_box.iter().flatten() {
            if !(b[0] <= b[1]) {
                bail!("parameter box entry [{}, {}] is empty", b[0], b[1]);
            }
        }
        if self.order == Some(0) {
            bail!("reduced order must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            bail!("threshold must lie in (0, 1), got {}", self.threshold);
        }
        if let Some([nc, nr]) = self.cur {
            if nc == 0 || nr == 0 {
                bail!("CUR column and row counts must be positive");
            }
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            bail!("tolerances must be positive");
        }
        if self.samples < 2 {
            bail!("need at least two output samples");
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                bail!("final time must be positive, got {t}");
            }
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(dir.join(CONFIG_FILE), text)?;
        Ok(())
    }
}
