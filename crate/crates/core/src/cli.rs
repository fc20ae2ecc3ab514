//! Command-line front end: `solve`, `convergence`, `stability` and `demo`.
//!
//! Settings come from an optional flat `key = value` file (`#` starts a
//! comment) and are overridden by same-named flags. Every CSV starts with a
//! header row; floats are written with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use crate::analysis::{convergence_study, h_grid, h_grid_half, k_grid, k_grid_half, stability_run, Axis, ConvergenceSetup, StabilityReport};
use crate::forms::NitscheParams;
use crate::geometry::{InterfaceTrajectory, SlabTimeline, Velocity};
use crate::timestepping::{march, Discretization, HeatProblem, SlabSolution, Trajectory};
use crate::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numerical(Error),
}

impl CliError {
    fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numerical(e) if is_config_error(e) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    match e {
        Error::InvalidArgument { .. } | Error::InterfaceOutsideDomain { .. } | Error::MeshMismatch { .. } => true,
        Error::Slab { source, .. } => is_config_error(source),
        _ => false,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Convergence,
    Stability,
    Demo,
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "solve" => Ok(Command::Solve),
            "convergence" => Ok(Command::Convergence),
            "stability" => Ok(Command::Stability),
            "demo" => Ok(Command::Demo),
            _ => Err(format!("unknown command {s:?}; expected solve, convergence, stability or demo")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu {
    Constant(f64),
    DemoSine,
}

impl Mu {
    pub fn velocity(self) -> Velocity {
        match self {
            Mu::Constant(mu) => Velocity::Constant(mu),
            Mu::DemoSine => Velocity::demo_sine(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// `u = sin²(πx) e^{−t/2}` with its source.
    Manufactured,
    /// `f ≡ 0`, `u₀ = sin²(πx)`.
    Free,
    Zero,
}

impl ProblemKind {
    pub fn problem(self) -> HeatProblem {
        match self {
            ProblemKind::Manufactured => HeatProblem::manufactured(),
            ProblemKind::Free => HeatProblem::free(sin_squared),
            ProblemKind::Zero => HeatProblem::zero(),
        }
    }
}

fn sin_squared(x: f64) -> f64 {
    (std::f64::consts::PI * x).sin().powi(2)
}

/// Sweep axis and values. Written as `k`, `h`, `k:12` (first 12 grid
/// points), `k-half:15` (half-octave grid) or `h=0.1,0.05,0.025`
/// (explicit values).
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn parse(s: &str, t_final: f64) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (axis, rest) = match s.find([':', '=']) {
            Some(i) => (&s[..i], Some((&s[i..i + 1], &s[i + 1..]))),
            None => (s, None),
        };
        let (axis, half) = match axis.trim().strip_suffix("-half") {
            Some(a) => (a, true),
            None => (axis.trim(), false),
        };
        let axis: Axis = axis.parse().map_err(|e: Error| e.to_string())?;
        let grid = |n: usize| match (axis, half) {
            (Axis::K, false) => k_grid(t_final, n),
            (Axis::K, true) => k_grid_half(t_final, n),
            (Axis::H, false) => h_grid(n),
            (Axis::H, true) => h_grid_half(n),
        };
        let values = match rest {
            None => grid(15),
            Some((":", n)) => {
                let n: usize = n.trim().parse().map_err(|_| format!("bad point count {n:?}"))?;
                if n == 0 {
                    return Err("point count must be positive".into());
                }
                grid(n)
            }
            Some((_, list)) => list
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad sweep value {v:?}")))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        };
        Ok(Self { axis, values })
    }
}

/// Validated settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub t_final: f64,
    pub slabs: usize,
    pub h0: f64,
    pub hg: f64,
    pub g_start: f64,
    pub g_length: f64,
    pub mu: Mu,
    pub gamma: f64,
    pub q: usize,
    pub problem: ProblemKind,
    pub sweep: Sweep,
    /// 1-based inclusive fit range; `None` fits every point.
    pub points: Option<(usize, usize)>,
    pub levels: usize,
    pub tol: f64,
    /// `None` writes to stdout (demo: `demo_output/`).
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Solve,
            t_final: 1.0,
            slabs: 100,
            h0: 1.0 / 64.0,
            hg: 1.0 / 64.0,
            g_start: 0.125,
            g_length: 0.25,
            mu: Mu::Constant(0.6),
            gamma: 10.0,
            q: 0,
            problem: ProblemKind::Manufactured,
            sweep: Sweep {
                axis: Axis::K,
                values: k_grid(1.0, 15),
            },
            points: None,
            levels: 3,
            tol: crate::geometry::DEFAULT_SNAP_TOL,
            out: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "command", "t_final", "slabs", "k", "h0", "hg", "g_start", "g_length", "mu", "gamma", "q", "problem", "sweep",
    "points", "levels", "tol", "out",
];

/// Reads a `key = value` file. Dashes in keys are read as underscores.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}", i + 1), format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(key, "unknown key"));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn field<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::config(key, format!("{v:?}: {e}"))))
        .transpose()
}

impl RunConfig {
    /// Builds and validates a config from merged key/value settings.
    pub fn from_map(map: &BTreeMap<String, String>) -> CliResult<Self> {
        let mut c = RunConfig::default();
        if let Some(cmd) = field::<Command>(map, "command")? {
            c.command = cmd;
        }
        if let Some(t) = field(map, "t_final")? {
            c.t_final = t;
        }
        if !(c.t_final > 0.0 && c.t_final.is_finite()) {
            return Err(CliError::config("t_final", "must be positive"));
        }
        match (field::<usize>(map, "slabs")?, field::<f64>(map, "k")?) {
            (Some(_), Some(_)) => return Err(CliError::config("k", "give either slabs or k, not both")),
            (Some(n), None) => c.slabs = n,
            (None, Some(k)) => {
                if !(k > 0.0 && k <= c.t_final) {
                    return Err(CliError::config("k", "must lie in (0, t_final]"));
                }
                c.slabs = (c.t_final / k).round().max(1.0) as usize;
            }
            (None, None) => {}
        }
        if c.slabs == 0 {
            return Err(CliError::config("slabs", "must be positive"));
        }
        if let Some(h) = field(map, "h0")? {
            c.h0 = h;
            c.hg = h;
        }
        if let Some(h) = field(map, "hg")? {
            c.hg = h;
        }
        if !(c.h0 > 0.0 && c.h0 <= 1.0) {
            return Err(CliError::config("h0", "must lie in (0, 1]"));
        }
        if !(c.hg > 0.0) {
            return Err(CliError::config("hg", "must be positive"));
        }
        if let Some(a) = field(map, "g_start")? {
            c.g_start = a;
        }
        if let Some(l) = field(map, "g_length")? {
            c.g_length = l;
        }
        if let Some(mu) = map.get("mu") {
            c.mu = match mu.as_str() {
                "demo-sine" | "demo_sine" => Mu::DemoSine,
                v => Mu::Constant(v.parse().map_err(|_| CliError::config("mu", format!("{v:?} is neither a number nor demo-sine")))?),
            };
        }
        if let Some(g) = field(map, "gamma")? {
            c.gamma = g;
        }
        if !(c.gamma >= 0.0 && c.gamma.is_finite()) {
            return Err(CliError::config("gamma", "must be a finite non-negative number"));
        }
        if let Some(q) = field(map, "q")? {
            c.q = q;
        }
        if c.q > 1 {
            return Err(CliError::config("q", "must be 0 or 1"));
        }
        if let Some(p) = map.get("problem") {
            c.problem = match p.as_str() {
                "manufactured" => ProblemKind::Manufactured,
                "free" => ProblemKind::Free,
                "zero" => ProblemKind::Zero,
                v => return Err(CliError::config("problem", format!("{v:?}; expected manufactured, free or zero"))),
            };
        }
        c.sweep = match map.get("sweep") {
            Some(s) => Sweep::parse(s, c.t_final).map_err(|e| CliError::config("sweep", e))?,
            None => Sweep::parse("k", c.t_final).expect("default sweep"),
        };
        if let Some(p) = map.get("points") {
            let (lo, hi) = p
                .split_once('-')
                .ok_or_else(|| CliError::config("points", format!("{p:?}; expected lo-hi")))?;
            let lo: usize = lo.trim().parse().map_err(|_| CliError::config("points", format!("bad start {lo:?}")))?;
            let hi: usize = hi.trim().parse().map_err(|_| CliError::config("points", format!("bad end {hi:?}")))?;
            if lo < 1 || hi <= lo || hi > c.sweep.values.len() {
                return Err(CliError::config(
                    "points",
                    format!("range {lo}-{hi} must satisfy 1 ≤ lo < hi ≤ {}", c.sweep.values.len()),
                ));
            }
            c.points = Some((lo, hi));
        }
        if let Some(l) = field(map, "levels")? {
            c.levels = l;
        }
        if c.levels == 0 {
            return Err(CliError::config("levels", "must be positive"));
        }
        if let Some(t) = field(map, "tol")? {
            c.tol = t;
        }
        if !(c.tol >= 0.0) {
            return Err(CliError::config("tol", "must be non-negative"));
        }
        c.out = map.get("out").map(PathBuf::from);
        Ok(c)
    }

    pub fn params(&self) -> CliResult<NitscheParams> {
        Ok(NitscheParams::with_gamma(self.gamma)?)
    }

    pub fn trajectory(&self) -> CliResult<InterfaceTrajectory> {
        Ok(InterfaceTrajectory::new(self.g_start, self.g_length, self.mu.velocity())?)
    }

    /// Uniform discretization with the given sizes; checks that `G` stays inside.
    pub fn discretization(&self, h0: f64, hg: f64, slabs: usize) -> CliResult<Discretization> {
        let timeline = SlabTimeline::uniform(self.t_final, slabs)?;
        let trajectory = self.trajectory()?;
        trajectory.all_positions(&timeline)?;
        let mut disc = Discretization::uniform(h0, hg, timeline, trajectory, self.params()?, self.q)?;
        disc.snap_tol = self.tol;
        Ok(disc)
    }
}

#[derive(Debug, Parser)]
#[command(name = "cutfem1d", about = "Cut FEM for the 1D heat equation on overlapping meshes", allow_negative_numbers = true)]
struct Flags {
    /// solve | convergence | stability | demo
    #[arg(long)]
    command: Option<String>,
    #[arg(long = "t-final")]
    t_final: Option<String>,
    #[arg(long)]
    slabs: Option<String>,
    /// Time step; the slab count is `round(t_final / k)`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    h0: Option<String>,
    /// Overlapping mesh size (defaults to h0).
    #[arg(long)]
    hg: Option<String>,
    #[arg(long = "g-start")]
    g_start: Option<String>,
    #[arg(long = "g-length")]
    g_length: Option<String>,
    /// Constant velocity or `demo-sine`.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// manufactured | free | zero
    #[arg(long)]
    problem: Option<String>,
    /// `k`, `h`, `k:12` or `h=0.1,0.05,...`
    #[arg(long)]
    sweep: Option<String>,
    /// Fit range `lo-hi` (1-based, inclusive).
    #[arg(long)]
    points: Option<String>,
    /// Refinement levels of the stability probe.
    #[arg(long)]
    levels: Option<String>,
    /// Snapping tolerance for near-coincident nodes.
    #[arg(long)]
    tol: Option<String>,
    /// Output file (demo: directory).
    #[arg(long)]
    out: Option<String>,
    /// key = value settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn pairs(self) -> (Option<PathBuf>, Vec<(&'static str, String)>) {
        let all = [
            ("command", self.command),
            ("t_final", self.t_final),
            ("slabs", self.slabs),
            ("k", self.k),
            ("h0", self.h0),
            ("hg", self.hg),
            ("g_start", self.g_start),
            ("g_length", self.g_length),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("q", self.q),
            ("problem", self.problem),
            ("sweep", self.sweep),
            ("points", self.points),
            ("levels", self.levels),
            ("tol", self.tol),
            ("out", self.out),
        ];
        (self.config, all.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect())
    }
}

/// Parses flags (and the config file they name) into a validated config.
pub fn config_from_args<I, T>(args: I) -> CliResult<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = Flags::try_parse_from(args).map_err(|e| CliError::config("flags", e.to_string()))?;
    let (file, pairs) = flags.pairs();
    let mut map = match file {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    // `slabs` and `k` are alternatives; a flag for one replaces the file's other.
    for (k, v) in pairs {
        match k {
            "slabs" => drop(map.remove("k")),
            "k" => drop(map.remove("slabs")),
            _ => {}
        }
        map.insert(k.to_string(), v);
    }
    RunConfig::from_map(&map)
}

/// Files written (or `-` for stdout) and a one-line summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Runs the command of `config`.
pub fn run(config: &RunConfig) -> CliResult<Outcome> {
    match config.command {
        Command::Solve => run_solve(config),
        Command::Convergence => run_convergence(config),
        Command::Stability => run_stability(config),
        Command::Demo => run_demo(config).map(|d| d.outcome),
    }
}

fn emit(out: Option<&Path>, csv: &str) -> CliResult<Vec<PathBuf>> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|source| CliError::Io {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            fs::write(path, csv).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            Ok(vec![path.to_path_buf()])
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(csv.as_bytes()).map_err(|source| CliError::Io {
                path: PathBuf::from("-"),
                source,
            })?;
            Ok(vec![PathBuf::from("-")])
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SOLUTION_HEADER: &str = "slab,t,limit,subdomain,x,u";

/// One row per piece endpoint for both time limits of every slab.
pub fn solution_csv(traj: &Trajectory) -> String {
    let mut csv = String::from(SOLUTION_HEADER);
    csv.push('\n');
    for s in &traj.slabs {
        for (limit, t, coeffs) in [("+", s.t0, s.start_value()), ("-", s.t1, s.end_value())] {
            for (sub, a, b, f) in s.space.labeled_pieces() {
                for x in [a, b] {
                    let _ = writeln!(
                        csv,
                        "{},{},{limit},{sub},{},{}",
                        s.slab,
                        fmt_f64(t),
                        fmt_f64(x),
                        fmt_f64(f.value(coeffs, x))
                    );
                }
            }
        }
    }
    csv
}

/// `max |u_h|` over both time limits of every slab.
pub fn sup_norm(traj: &Trajectory) -> f64 {
    traj.slabs.iter().map(slab_sup).fold(0.0, f64::max)
}

fn slab_sup(s: &SlabSolution) -> f64 {
    let mut m: f64 = 0.0;
    for coeffs in [s.start_value(), s.end_value()] {
        for (_, a, b, f) in s.space.labeled_pieces() {
            m = m.max(f.value(coeffs, a).abs()).max(f.value(coeffs, b).abs());
        }
    }
    m
}

fn run_solve(c: &RunConfig) -> CliResult<Outcome> {
    let disc = c.discretization(c.h0, c.hg, c.slabs)?;
    let problem = c.problem.problem();
    let traj = march(&disc, &problem)?;
    let files = emit(c.out.as_deref(), &solution_csv(&traj))?;
    let last = traj.last();
    let summary = match &problem.exact {
        Some(u) => {
            let t = last.t1;
            let err = crate::analysis::final_error(last, |x| u(x, t), 2);
            format!("final_error,{}", fmt_f64(err))
        }
        None => format!("final_time,{}", fmt_f64(last.t1)),
    };
    Ok(Outcome { files, summary })
}

/// Convergence table plus the trailing `slope,<value>,points,<lo>-<hi>` line.
pub fn convergence_csv(axis: Axis, points: &[(f64, f64)], slope: f64, range: (usize, usize)) -> String {
    let mut csv = format!("{axis},error\n");
    for (s, e) in points {
        let _ = writeln!(csv, "{},{}", fmt_f64(*s), fmt_f64(*e));
    }
    let _ = writeln!(csv, "slope,{},points,{}-{}", fmt_f64(slope), range.0, range.1);
    csv
}

fn run_convergence(c: &RunConfig) -> CliResult<Outcome> {
    let n = c.sweep.values.len();
    if n < 2 {
        return Err(CliError::config("sweep", "needs at least two points"));
    }
    let range = c.points.unwrap_or((1, n));
    let fixed = match c.sweep.axis {
        Axis::K => c.h0,
        Axis::H => c.t_final / c.slabs as f64,
    };
    let setup = ConvergenceSetup {
        velocity: c.mu.velocity(),
        t_final: c.t_final,
        g_start: c.g_start,
        g_length: c.g_length,
        params: c.params()?,
        problem: c.problem.problem(),
        ..ConvergenceSetup::manufactured(c.sweep.axis, c.q, 0.0, fixed, c.sweep.values.clone(), range)
    };
    let report = convergence_study(&setup)?;
    let csv = convergence_csv(report.axis, &report.points(), report.slope, range);
    let files = emit(c.out.as_deref(), &csv)?;
    Ok(Outcome {
        files,
        summary: format!("slope,{},points,{}-{}", fmt_f64(report.slope), range.0, range.1),
    })
}

pub const STABILITY_HEADER: &str = "level,h0,k,initial_norm,final_norm,time_derivative,laplacian,jumps,energy,jumps_squared,strong_time_derivative,strong_laplacian,strong_jumps,log_factor,main_constant,basic_constant,strong_constant";

pub fn stability_csv(reports: &[StabilityReport]) -> String {
    let mut csv = String::from(STABILITY_HEADER);
    csv.push('\n');
    for (l, r) in reports.iter().enumerate() {
        let vals = [
            r.h0,
            r.k,
            r.initial_norm,
            r.final_norm,
            r.time_derivative,
            r.laplacian,
            r.jumps,
            r.energy,
            r.jumps_squared,
            r.strong_time_derivative,
            r.strong_laplacian,
            r.strong_jumps,
            r.log_factor,
            r.main_constant(),
            r.basic_constant(),
            r.strong_constant(),
        ];
        let _ = write!(csv, "{}", l + 1);
        for v in vals {
            let _ = write!(csv, ",{}", fmt_f64(v));
        }
        csv.push('\n');
    }
    csv
}

/// Stability runs over `levels` simultaneous halvings of `h₀`, `h_G` and `k`.
pub fn stability_levels(c: &RunConfig) -> CliResult<Vec<StabilityReport>> {
    let initial = match c.problem {
        ProblemKind::Zero => |_: f64| 0.0,
        _ => sin_squared,
    };
    (0..c.levels)
        .map(|l| {
            let s = 1usize << l;
            let disc = c.discretization(c.h0 / s as f64, c.hg / s as f64, c.slabs * s)?;
            Ok(stability_run(&disc, initial)?)
        })
        .collect()
}

fn run_stability(c: &RunConfig) -> CliResult<Outcome> {
    let reports = stability_levels(c)?;
    let files = emit(c.out.as_deref(), &stability_csv(&reports))?;
    let worst = reports.iter().map(|r| r.final_norm / r.initial_norm).fold(0.0, f64::max);
    Ok(Outcome {
        files,
        summary: format!("max_final_over_initial,{}", fmt_f64(worst)),
    })
}

/// Demo results per order, alongside the written files.
#[derive(Debug, Clone)]
pub struct DemoOutput {
    pub outcome: Outcome,
    /// `(q, sup |u_h|, slabs)`
    pub runs: Vec<(usize, f64, usize)>,
}

/// Demo settings: 22 background nodes, 7 overlapping nodes, 10 slabs on
/// `(0, 3]`, sine velocity. Other fields are taken from `base`.
pub fn demo_config(base: &RunConfig) -> RunConfig {
    RunConfig {
        command: Command::Demo,
        t_final: 3.0,
        slabs: 10,
        h0: 1.0 / 21.0,
        hg: base.g_length / 6.0,
        mu: Mu::DemoSine,
        ..base.clone()
    }
}

/// Runs the demo for `q = 0` and `q = 1` and writes `demo_q0.csv`,
/// `demo_q1.csv` and `demo_interfaces.csv` into the output directory.
pub fn run_demo(base: &RunConfig) -> CliResult<DemoOutput> {
    let c = demo_config(base);
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("demo_output"));
    let mut files = Vec::new();
    let mut runs = Vec::new();
    let mut interfaces = String::new();
    for q in [0, 1] {
        let cq = RunConfig { q, ..c.clone() };
        let disc = cq.discretization(cq.h0, cq.hg, cq.slabs)?;
        if q == 0 {
            interfaces.push_str("slab,t0,t1,a,b\n");
            for n in 1..=disc.timeline.num_slabs() {
                let (t0, t1) = disc.timeline.slab(n);
                let (a, b) = disc.trajectory.slab_interface(&disc.timeline, n)?;
                let _ = writeln!(interfaces, "{n},{},{},{},{}", fmt_f64(t0), fmt_f64(t1), fmt_f64(a), fmt_f64(b));
            }
        }
        let traj = march(&disc, &cq.problem.problem())?;
        runs.push((q, sup_norm(&traj), traj.num_slabs()));
        files.extend(emit(Some(&dir.join(format!("demo_q{q}.csv"))), &solution_csv(&traj))?);
    }
    files.extend(emit(Some(&dir.join("demo_interfaces.csv")), &interfaces)?);
    let summary = runs
        .iter()
        .map(|(q, s, _)| format!("sup_q{q},{}", fmt_f64(*s)))
        .collect::<Vec<_>>()
        .join(",");
    Ok(DemoOutput {
        outcome: Outcome { files, summary },
        runs,
    })
}

/// Entry point for the binary: parse, run, report, map errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") {
        let _ = Flags::try_parse_from(&args).map_err(|e| e.print());
        return ExitCode::from(EXIT_OK);
    }
    let result = config_from_args(&args).and_then(|c| run(&c));
    match result {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, &str)]) -> CliResult<RunConfig> {
        let map = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        RunConfig::from_map(&map)
    }

    #[test]
    fn config_text_parsing() {
        let map = parse_config_text("# header\ncommand = demo\n\nt-final = 2 # trailing\n").unwrap();
        assert_eq!(map["command"], "demo");
        assert_eq!(map["t_final"], "2");
        assert!(matches!(parse_config_text("nonsense"), Err(CliError::Config { .. })));
        match parse_config_text("colour = red") {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "colour"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_and_validation() {
        let c = cfg(&[]).unwrap();
        assert_eq!((c.t_final, c.g_start, c.g_length, c.gamma, c.q), (1.0, 0.125, 0.25, 10.0, 0));
        assert_eq!(c.mu, Mu::Constant(0.6));
        assert_eq!(cfg(&[("k", "0.01")]).unwrap().slabs, 100);
        assert_eq!(cfg(&[("mu", "demo-sine")]).unwrap().mu, Mu::DemoSine);
        for (key, bad) in [("gamma", "-1"), ("q", "2"), ("mu", "fast"), ("points", "3-2"), ("t_final", "0"), ("sweep", "z")] {
            match cfg(&[(key, bad)]) {
                Err(CliError::Config { field, .. }) => assert_eq!(field, key),
                other => panic!("{key}: {other:?}"),
            }
        }
        assert!(cfg(&[("slabs", "4"), ("k", "0.1")]).is_err());
    }

    #[test]
    fn sweep_forms() {
        assert_eq!(Sweep::parse("k:3", 1.0).unwrap().values, vec![0.5, 0.25, 0.125]);
        assert_eq!(Sweep::parse("h", 1.0).unwrap().values.len(), 15);
        assert_eq!(Sweep::parse("k-half:4", 2.0).unwrap().values, vec![2.0, 1.0, 2.0 / 3.0, 0.5]);
        let s = Sweep::parse("h=0.1, 0.05", 1.0).unwrap();
        assert_eq!((s.axis, s.values), (Axis::H, vec![0.1, 0.05]));
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("cutfem1d-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let file = dir.join("run.cfg");
        fs::write(&file, "q = 1\nslabs = 8\ngamma = 5\n").unwrap();
        let c = config_from_args(["cutfem1d", "--config", file.to_str().unwrap(), "--k", "0.25", "--gamma", "7"]).unwrap();
        assert_eq!((c.q, c.slabs, c.gamma), (1, 4, 7.0));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn exit_codes() {
        let c = cfg(&[("g_start", "0.7"), ("mu", "0.5"), ("slabs", "4")]).unwrap();
        let e = run(&c).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert!(e.to_string().contains("slab"), "{e}");
        assert_eq!(CliError::Numerical(Error::Singular { pivot: 3 }).exit_code(), EXIT_NUMERICAL);
        let wrapped = Error::Slab {
            slab: 2,
            source: Box::new(Error::Residual { residual: 1.0, tol: 1e-9 }),
        };
        assert_eq!(CliError::from(wrapped).exit_code(), EXIT_NUMERICAL);
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
