//! Run configurations: parsing, validation and sweep execution.
//!
//! A run is described by one TOML file:
//!
//! ```toml
//! mode = "se-curve"              # capacity | se-curve | logloss-curve | monostatic-curve
//! distortion_grid = [0.7, 0.8, 0.9, 1.0]
//! u_size = 17                    # optional, defaults to |X|
//! power_budget = 10.0            # optional; Gaussian channels default to their B
//! warm_start = false
//!
//! [solver]
//! seed = 1
//! restarts = 4
//!
//! [channel.gaussian]
//! sigma_s_sq = 1.0
//! sigma_1_sq = 1.0
//! sigma_2_sq = 2.0
//! power_budget = 10.0
//!
//! [output]
//! curve = "curve.csv"
//! trace_dir = "traces"           # optional, one JSON-lines file per point
//! ```
//!
//! Inline channels use `[channel.discrete]` with tensors written as
//! `{ shape = [...], data = [...] }` in row-major order.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{discretize_gaussian, ChannelModel, GaussianSpec};
use crate::classic::{capacity_with_cost, CapacityConfig, CapacityResult};
use crate::error::{Error, Result};
use crate::logloss::{solve_ll, solve_ll_from};
use crate::monostatic::monostatic_reference;
use crate::multiplier::RootConfig;
use crate::prob::{Alphabet, DiscreteDistribution, JointTable};
use crate::se::{solve, solve_from};
use crate::solver::{SolveResult, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Capacity,
    SeCurve,
    LoglossCurve,
    MonostaticCurve,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Capacity => "capacity",
            Mode::SeCurve => "se-curve",
            Mode::LoglossCurve => "logloss-curve",
            Mode::MonostaticCurve => "monostatic-curve",
        }
    }
}

/// Row-major tensor with explicit axis sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorizationKind {
    #[default]
    StateDependent,
    Markov,
}

/// Inline channel. In the state-dependent form `kernel_y` is `[X, S, Y]`
/// and `kernel_z` is `[X, S, Z]`; two-axis kernels `[X, Y]` / `[X, Z]` do
/// not depend on the state. A missing `kernel_z` means a single-symbol
/// (uninformative) sensing output. In the Markov form `kernel_y` is
/// `[X, Y]` and `kernel_zs` is `[X, Z, S]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteChannel {
    #[serde(default)]
    pub factorization: FactorizationKind,
    pub x_values: Option<Vec<f64>>,
    pub s_values: Option<Vec<f64>>,
    pub state_prior: Option<Vec<f64>>,
    pub kernel_y: Tensor,
    pub kernel_z: Option<Tensor>,
    pub kernel_zs: Option<Tensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelSection {
    Gaussian(GaussianSpec),
    Discrete(DiscreteChannel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub jitter: f64,
    pub seed: Option<u64>,
    pub root_tol: f64,
    pub lambda_max: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            tol: s.tol,
            max_iters: s.max_iters,
            restarts: s.restarts,
            jitter: s.jitter,
            seed: None,
            root_tol: s.root.root_tol,
            lambda_max: s.root.lambda_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub curve: PathBuf,
    pub trace_dir: Option<PathBuf>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            curve: PathBuf::from("curve.csv"),
            trace_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub distortion_grid: Vec<f64>,
    pub u_size: Option<usize>,
    pub power_budget: Option<f64>,
    #[serde(default)]
    pub warm_start: bool,
    #[serde(default)]
    pub solver: SolverSection,
    pub channel: ChannelSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// One line of the curve file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    #[serde(rename = "D")]
    pub d: f64,
    pub rate_bits: f64,
    pub rate_nats: f64,
    pub achieved_distortion: f64,
    pub lambda: f64,
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CurveRecord {
    fn failed(d: f64) -> Self {
        Self {
            d,
            rate_bits: f64::NAN,
            rate_nats: f64::NAN,
            achieved_distortion: f64::NAN,
            lambda: f64::NAN,
            mu: f64::NAN,
            iterations: 0,
            converged: false,
        }
    }

    fn from_solve(d: f64, r: &SolveResult) -> Self {
        Self {
            d,
            rate_bits: r.rate_bits,
            rate_nats: r.rate_nats,
            achieved_distortion: r.achieved_distortion,
            lambda: r.lambda,
            mu: r.mu,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

pub const CURVE_HEADER: [&str; 8] = [
    "D",
    "rate_bits",
    "rate_nats",
    "achieved_distortion",
    "lambda",
    "mu",
    "iterations",
    "converged",
];

/// Outcome of a run: the records written and the process exit code
/// (0 success, 2 some point did not converge, 1 some point failed).
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub records: Vec<CurveRecord>,
    pub diagnostics: Vec<String>,
    pub exit_code: i32,
    pub curve_path: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Every problem found without running a solver; empty when valid.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let grid = &self.distortion_grid;
        if self.mode != Mode::Capacity {
            if grid.is_empty() {
                out.push(format!("distortion_grid is empty; {} needs at least one point", self.mode.as_str()));
            }
            for (i, d) in grid.iter().enumerate() {
                if !(d.is_finite() && *d > 0.0) {
                    out.push(format!("distortion_grid[{i}] = {d} is not a positive finite number"));
                }
            }
            for (i, pair) in grid.windows(2).enumerate() {
                if !(pair[1] > pair[0]) {
                    out.push(format!(
                        "distortion_grid must be strictly increasing: entry {} ({}) does not exceed entry {i} ({})",
                        i + 1,
                        pair[1],
                        pair[0]
                    ));
                }
            }
        }
        if self.u_size == Some(0) {
            out.push("u_size must be positive".into());
        }
        if let Some(b) = self.power_budget {
            if !(b.is_finite() && b > 0.0) {
                out.push(format!("power_budget must be positive and finite, got {b}"));
            }
        }
        if self.solver.restarts > 0 && self.solver.seed.is_none() {
            out.push("solver.seed is required when solver.restarts > 0".into());
        }
        if let Err(e) = self.solver_config(None).validate() {
            out.push(format!("solver: {e}"));
        }
        match self.build_channel() {
            Ok(ch) => {
                if self.mode == Mode::LoglossCurve && !ch.is_markov() {
                    if let Err(e) = ch.to_markov() {
                        out.push(format!("channel: {e}"));
                    }
                }
            }
            Err(e) => out.push(format!("channel: {e}")),
        }
        out
    }

    pub fn solver_config(&self, seed_override: Option<u64>) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            tol: s.tol,
            max_iters: s.max_iters,
            restarts: s.restarts,
            jitter: s.jitter,
            seed: seed_override.or(s.seed).unwrap_or(0),
            u_size: self.u_size,
            root: RootConfig {
                root_tol: s.root_tol,
                lambda_max: s.lambda_max,
            },
        }
    }

    /// Explicit budget, or the Gaussian spec's own budget.
    pub fn effective_power_budget(&self) -> Option<f64> {
        self.power_budget.or(match &self.channel {
            ChannelSection::Gaussian(g) => Some(g.power_budget),
            ChannelSection::Discrete(_) => None,
        })
    }

    pub fn build_channel(&self) -> Result<ChannelModel> {
        match &self.channel {
            ChannelSection::Gaussian(g) => discretize_gaussian(g),
            ChannelSection::Discrete(d) => build_discrete(d),
        }
    }
}

fn alphabet(values: &Option<Vec<f64>>, size: usize, name: &str) -> Result<Alphabet> {
    match values {
        None => Alphabet::indexed(size),
        Some(v) if v.len() == size => Alphabet::with_values(v.clone()),
        Some(v) => Err(Error::Shape(format!(
            "{name} has {} values but the kernels imply {size} symbols",
            v.len()
        ))),
    }
}

fn check_tensor(t: &Tensor, name: &str, ranks: &[usize]) -> Result<()> {
    if !ranks.contains(&t.shape.len()) {
        return Err(Error::Shape(format!(
            "{name} must have {} axes, got shape {:?}",
            ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" or "),
            t.shape
        )));
    }
    let n: usize = t.shape.iter().product();
    if n != t.data.len() || n == 0 {
        return Err(Error::Shape(format!(
            "{name} shape {:?} needs {n} entries, got {}",
            t.shape,
            t.data.len()
        )));
    }
    Ok(())
}

fn in_context<T>(r: Result<T>, name: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::NotNormalized { what, sum } => Error::NotNormalized {
            what: format!("{name} {what}"),
            sum,
        },
        other => other,
    })
}

/// Axes `[X, S, O]` from a 3-axis kernel, or a 2-axis `[X, O]` kernel
/// repeated over the state.
fn state_kernel(t: &Tensor, ns: usize, name: &str) -> Result<(usize, usize, Vec<f64>)> {
    check_tensor(t, name, &[2, 3])?;
    if t.shape.len() == 3 {
        if t.shape[1] != ns {
            return Err(Error::Shape(format!(
                "{name} state axis has {} symbols, expected {ns}",
                t.shape[1]
            )));
        }
        return Ok((t.shape[0], t.shape[2], t.data.clone()));
    }
    let (nx, no) = (t.shape[0], t.shape[1]);
    let mut data = Vec::with_capacity(nx * ns * no);
    for x in 0..nx {
        for _ in 0..ns {
            data.extend_from_slice(&t.data[x * no..(x + 1) * no]);
        }
    }
    Ok((nx, no, data))
}

pub fn build_discrete(d: &DiscreteChannel) -> Result<ChannelModel> {
    match d.factorization {
        FactorizationKind::StateDependent => {
            if d.kernel_zs.is_some() {
                return Err(Error::Config(
                    "kernel_zs belongs to the markov factorization".into(),
                ));
            }
            let ns = match (&d.state_prior, &d.s_values, d.kernel_y.shape.len()) {
                (Some(p), _, _) => p.len(),
                (None, Some(v), _) => v.len(),
                (None, None, 3) => d.kernel_y.shape[1],
                _ => 1,
            };
            let s = alphabet(&d.s_values, ns, "s_values")?;
            let prior = match &d.state_prior {
                Some(p) => DiscreteDistribution::new(s.clone(), p.clone())?,
                None => DiscreteDistribution::uniform(s.clone()),
            };
            let (nx, ny, ky) = state_kernel(&d.kernel_y, ns, "kernel_y")?;
            let (nxz, nz, kz) = match &d.kernel_z {
                Some(t) => state_kernel(t, ns, "kernel_z")?,
                None => (nx, 1, vec![1.0; nx * ns]),
            };
            if nxz != nx {
                return Err(Error::Shape(format!(
                    "kernel_z has {nxz} inputs, kernel_y has {nx}"
                )));
            }
            let x = alphabet(&d.x_values, nx, "x_values")?;
            let ky = in_context(
                JointTable::conditional(vec![x.clone(), s.clone(), Alphabet::new(ny)?], ky, vec![0, 1]),
                "kernel_y",
            )?;
            let kz = in_context(
                JointTable::conditional(vec![x, s, Alphabet::new(nz)?], kz, vec![0, 1]),
                "kernel_z",
            )?;
            ChannelModel::state_dependent(prior, ky, kz)
        }
        FactorizationKind::Markov => {
            if d.kernel_z.is_some() {
                return Err(Error::Config(
                    "kernel_z belongs to the state-dependent factorization".into(),
                ));
            }
            let kzs = d
                .kernel_zs
                .as_ref()
                .ok_or_else(|| Error::Config("the markov factorization needs kernel_zs".into()))?;
            check_tensor(&d.kernel_y, "kernel_y", &[2])?;
            check_tensor(kzs, "kernel_zs", &[3])?;
            let (nx, ny) = (d.kernel_y.shape[0], d.kernel_y.shape[1]);
            let (nz, ns) = (kzs.shape[1], kzs.shape[2]);
            if kzs.shape[0] != nx {
                return Err(Error::Shape(format!(
                    "kernel_zs has {} inputs, kernel_y has {nx}",
                    kzs.shape[0]
                )));
            }
            let x = alphabet(&d.x_values, nx, "x_values")?;
            let s = alphabet(&d.s_values, ns, "s_values")?;
            let prior_mass = match &d.state_prior {
                Some(p) => p.clone(),
                None => (0..ns)
                    .map(|j| (0..nz).map(|z| kzs.data[z * ns + j]).sum())
                    .collect(),
            };
            let prior = DiscreteDistribution::new(s.clone(), prior_mass)?;
            let ky = in_context(
                JointTable::conditional(vec![x.clone(), Alphabet::new(ny)?], d.kernel_y.data.clone(), vec![0]),
                "kernel_y",
            )?;
            let kzs = in_context(
                JointTable::conditional(vec![x, Alphabet::new(nz)?, s], kzs.data.clone(), vec![0]),
                "kernel_zs",
            )?;
            ChannelModel::markov(prior, ky, kzs)
        }
    }
}

/// Formats a value with 12 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

fn write_curve(path: &Path, records: &[CurveRecord]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(CURVE_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    for r in records {
        w.write_record([
            format_value(r.d),
            format_value(r.rate_bits),
            format_value(r.rate_nats),
            format_value(r.achieved_distortion),
            format_value(r.lambda),
            format_value(r.mu),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceHeader<'a> {
    mode: &'a str,
    #[serde(rename = "D")]
    d: f64,
    point: usize,
    master_seed: u64,
    seed: u64,
    restarts: usize,
}

fn write_trace(
    dir: &Path,
    point: usize,
    header: &TraceHeader<'_>,
    lines: impl Iterator<Item = serde_json::Value>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("point_{point:03}.jsonl"));
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    let head = serde_json::to_string(header).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(f, "{head}")?;
    for line in lines {
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    Ok(())
}

/// Per-point seeds drawn in grid order from the master seed.
fn point_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.random::<u64>()).collect()
}

/// Runs a parsed config. Relative output paths resolve against
/// `base_dir` unless an output directory override is given.
pub fn run_config(config: &RunConfig, base_dir: &Path, overrides: &Overrides) -> Result<RunReport> {
    let mut diagnostics = config.diagnostics();
    if overrides.seed.is_some() {
        diagnostics.retain(|d| !d.starts_with("solver.seed"));
    }
    if !diagnostics.is_empty() {
        return Err(Error::Config(diagnostics.join("; ")));
    }
    let base = overrides.output_dir.clone().unwrap_or_else(|| base_dir.to_path_buf());
    let curve_path = base.join(&config.output.curve);
    let trace_dir = config.output.trace_dir.as_ref().map(|d| base.join(d));
    let solver = config.solver_config(overrides.seed);
    let channel = config.build_channel()?;
    let budget = config.effective_power_budget();
    let master_seed = solver.seed;

    let mut diagnostics = Vec::new();
    let records = match config.mode {
        Mode::Capacity => {
            let cap = capacity_record(&channel, budget, &solver)?;
            if let Some(dir) = &trace_dir {
                let header = TraceHeader {
                    mode: config.mode.as_str(),
                    d: f64::INFINITY,
                    point: 0,
                    master_seed,
                    seed: master_seed,
                    restarts: 0,
                };
                let lines = cap
                    .trace
                    .iter()
                    .enumerate()
                    .map(|(i, v)| serde_json::json!({"iteration": i + 1, "objective": v}));
                write_trace(dir, 0, &header, lines)?;
            }
            vec![CurveRecord {
                d: f64::INFINITY,
                rate_bits: cap.capacity_bits(),
                rate_nats: cap.capacity,
                achieved_distortion: f64::NAN,
                lambda: 0.0,
                mu: cap.mu,
                iterations: cap.iterations,
                converged: cap.converged,
            }]
        }
        Mode::MonostaticCurve => {
            let cap_cfg = capacity_config(&solver);
            let reference = monostatic_reference(&channel, budget, &cap_cfg)?;
            config
                .distortion_grid
                .iter()
                .map(|&d| {
                    if d >= reference.distortion {
                        CurveRecord {
                            d,
                            rate_bits: reference.rate.capacity_bits(),
                            rate_nats: reference.rate.capacity,
                            achieved_distortion: reference.distortion,
                            lambda: 0.0,
                            mu: reference.rate.mu,
                            iterations: reference.rate.iterations,
                            converged: reference.rate.converged,
                        }
                    } else {
                        diagnostics.push(format!(
                            "D = {d}: below the monostatic distortion floor {}",
                            reference.distortion
                        ));
                        CurveRecord::failed(d)
                    }
                })
                .collect()
        }
        Mode::SeCurve | Mode::LoglossCurve => {
            let channel = if config.mode == Mode::LoglossCurve {
                channel.to_markov()?
            } else {
                channel
            };
            let grid = &config.distortion_grid;
            let seeds = point_seeds(master_seed, grid.len());
            let solve_point = |i: usize, init: Option<&JointTable>| -> Result<SolveResult> {
                let cfg = SolverConfig {
                    seed: seeds[i],
                    ..solver.clone()
                };
                let d = grid[i];
                match (config.mode, init) {
                    (Mode::SeCurve, None) => solve(&channel, d, &cfg, budget),
                    (Mode::SeCurve, Some(p)) => solve_from(&channel, d, &cfg, budget, p),
                    (_, None) => solve_ll(&channel, d, &cfg, budget),
                    (_, Some(p)) => solve_ll_from(&channel, d, &cfg, budget, p),
                }
            };
            let results: Vec<Result<SolveResult>> = if config.warm_start {
                let mut out: Vec<Result<SolveResult>> = Vec::with_capacity(grid.len());
                for i in 0..grid.len() {
                    let init = out.iter().rev().find_map(|r| r.as_ref().ok()).map(|r| r.p_ux.clone());
                    out.push(solve_point(i, init.as_ref()));
                }
                out
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(overrides.workers.unwrap_or(1).max(1))
                    .build()
                    .map_err(|e| Error::Config(e.to_string()))?;
                pool.install(|| (0..grid.len()).into_par_iter().map(|i| solve_point(i, None)).collect())
            };
            let mut records = Vec::with_capacity(grid.len());
            for (i, result) in results.iter().enumerate() {
                let d = grid[i];
                match result {
                    Ok(r) => {
                        if !r.converged {
                            diagnostics.push(format!(
                                "D = {d}: not converged after {} iterations",
                                r.iterations
                            ));
                        }
                        records.push(CurveRecord::from_solve(d, r));
                        if let Some(dir) = &trace_dir {
                            let header = TraceHeader {
                                mode: config.mode.as_str(),
                                d,
                                point: i,
                                master_seed,
                                seed: seeds[i],
                                restarts: solver.restarts,
                            };
                            let lines = r.trace.iter().map(|t| serde_json::to_value(t).expect("serializable"));
                            write_trace(dir, i, &header, lines)?;
                        }
                    }
                    Err(e) => {
                        diagnostics.push(format!("D = {d}: {e}"));
                        records.push(CurveRecord::failed(d));
                    }
                }
            }
            records
        }
    };
    write_curve(&curve_path, &records)?;
    let failed = records.iter().any(|r| r.rate_nats.is_nan());
    let unconverged = records.iter().any(|r| !r.converged);
    let exit_code = if failed {
        1
    } else if unconverged {
        2
    } else {
        0
    };
    Ok(RunReport {
        records,
        diagnostics,
        exit_code,
        curve_path,
    })
}

fn capacity_config(solver: &SolverConfig) -> CapacityConfig {
    CapacityConfig {
        root: solver.root,
        ..CapacityConfig::default()
    }
}

fn capacity_record(channel: &ChannelModel, budget: Option<f64>, solver: &SolverConfig) -> Result<CapacityResult> {
    let kernel = channel.kernel_y_marginal();
    let cfg = capacity_config(solver);
    match budget {
        None => crate::classic::capacity(&kernel, &cfg),
        Some(b) => {
            let cost: Vec<f64> = channel.input_values().iter().map(|x| x * x).collect();
            capacity_with_cost(&kernel, &cost, b, &cfg)
        }
    }
}

/// Loads, runs and reports a config file; prints diagnostics to stderr and
/// returns the exit code.
pub fn run_file(path: &Path, overrides: &Overrides) -> i32 {
    let config = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let base = path.parent().unwrap_or(Path::new("."));
    match run_config(&config, base, overrides) {
        Ok(report) => {
            for d in &report.diagnostics {
                eprintln!("warning: {d}");
            }
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Diagnostics for a config file without running it.
pub fn validate_file(path: &Path) -> Vec<String> {
    match RunConfig::load(path) {
        Ok(c) => c.diagnostics(),
        Err(e) => vec![e.to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BSC: &str = r#"
mode = "capacity"

[solver]
restarts = 0

[channel.discrete]
kernel_y = { shape = [2, 2], data = [0.9, 0.1, 0.1, 0.9] }
"#;

    #[test]
    fn parses_inline_channel() {
        let c = RunConfig::from_toml(BSC).unwrap();
        assert_eq!(c.mode, Mode::Capacity);
        assert!(c.diagnostics().is_empty(), "{:?}", c.diagnostics());
        let ch = c.build_channel().unwrap();
        assert_eq!(ch.kernels().nz, 1);
        assert_eq!(ch.kernels().ns, 1);
    }

    #[test]
    fn integer_grid_entries_are_accepted() {
        let text = BSC.replace("mode = \"capacity\"", "mode = \"se-curve\"\ndistortion_grid = [1, 2.5]");
        let c = RunConfig::from_toml(&text).unwrap();
        assert_eq!(c.distortion_grid, vec![1.0, 2.5]);
    }

    #[test]
    fn unnormalized_row_is_named() {
        let text = BSC.replace("0.9, 0.1, 0.1, 0.9", "0.9, 0.1, 0.1, 0.8");
        let d = RunConfig::from_toml(&text).unwrap().diagnostics();
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("kernel_y") && d[0].contains("axis0=1"), "{d:?}");
    }

    #[test]
    fn grid_problems_are_reported() {
        let text = BSC.replace("mode = \"capacity\"", "mode = \"se-curve\"\ndistortion_grid = [0.5, 0.4]");
        let d = RunConfig::from_toml(&text).unwrap().diagnostics();
        assert!(d.iter().any(|m| m.contains("strictly increasing")), "{d:?}");
        let text = BSC.replace("mode = \"capacity\"", "mode = \"se-curve\"");
        let d = RunConfig::from_toml(&text).unwrap().diagnostics();
        assert!(d.iter().any(|m| m.contains("empty")), "{d:?}");
    }

    #[test]
    fn missing_seed_with_restarts() {
        let text = BSC.replace("restarts = 0", "restarts = 2");
        let d = RunConfig::from_toml(&text).unwrap().diagnostics();
        assert!(d.iter().any(|m| m.contains("seed")), "{d:?}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml(&format!("{BSC}\nbogus = 1\n")).is_err());
    }

    #[test]
    fn value_format_has_twelve_digits() {
        assert_eq!(format_value(0.5310044064107188), "5.31004406411e-1");
        assert_eq!(format_value(f64::NAN), "nan");
        assert_eq!(format_value(f64::INFINITY), "inf");
    }

    #[test]
    fn seeds_do_not_depend_on_workers() {
        assert_eq!(point_seeds(9, 4), point_seeds(9, 4));
        assert_eq!(point_seeds(9, 4)[..2], point_seeds(9, 2)[..]);
    }
}
