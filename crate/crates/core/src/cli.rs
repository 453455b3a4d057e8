//! `spduff` command line.
//!
//! Settings are resolved in three layers: built-in defaults, an optional
//! JSON config file (`--config`), then flags. The resolved [`RunConfig`]
//! serializes to JSON that parses back to the same value.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analysis::{self, AnalysisOptions, DEFAULT_EPSILONS};
use crate::energy::{PotentialContext, Well, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::manifold::{self, BranchId, ChartId, CriticalManifold, Geometry};
use crate::output;
use crate::polar::{self, ConstantGrids};
use crate::problem::{builtin, Location, OscillatorProblem, ValidationReport};
use crate::simulate::{self, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "spduff",
    version,
    about = "Singularly perturbed forced Duffing oscillator toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a problem and check the manifold assumptions A1-A4.
    Check(CommonArgs),
    /// Integrate one trajectory and write trajectory.csv and events.csv.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        span: SpanArgs,
    },
    /// Turning points, action and frequency of a frozen-time orbit.
    Energy {
        #[command(flatten)]
        common: CommonArgs,
        /// Frozen time.
        #[arg(long)]
        t: Option<f64>,
        /// Energy level [default: H0(t) + delta].
        #[arg(long)]
        level: Option<f64>,
        /// left, right or outer [default: outer].
        #[arg(long)]
        well: Option<String>,
    },
    /// Chart constants r_min, eta, delta1, delta2 and c.
    Constants(CommonArgs),
    /// Oscillation reports over a list of epsilons, with CSV and SVG output.
    Sweep(CommonArgs),
    /// Frozen-time force, potential and phase curve.
    PhasePortrait {
        #[command(flatten)]
        common: CommonArgs,
        /// Frozen time [default: -0.5, t_min, 0, t_max, 0.5 inside the interval].
        #[arg(long)]
        t: Option<f64>,
    },
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Problem JSON file.
    pub problem: Option<PathBuf>,
    /// Builtin instance D0, D1 or D2 instead of a file.
    #[arg(long)]
    pub builtin: Option<String>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma separated epsilons [default: 0.02,0.01,0.005 for sweep, 0.01 otherwise].
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Energy offset above the base level [default: 0.05].
    #[arg(long)]
    pub delta: Option<f64>,
    /// [default: 1e-9]
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// [default: 1e-11]
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Largest step in fast time [default: 0.1].
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Chart margin as a fraction of the fold separation [default: 0.05].
    #[arg(long)]
    pub margin: Option<f64>,
    /// Constant grid sizes n_t,n_y,n_gamma [default: 64,256,64].
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for sampled checks [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random samples for sampled checks [default: 256].
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct SpanArgs {
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub w0: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Check,
    Simulate,
    Energy,
    Constants,
    Sweep,
    PhasePortrait,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    Builtin(String),
    Path(PathBuf),
}

impl ProblemSource {
    pub fn load(&self) -> Result<OscillatorProblem> {
        match self {
            ProblemSource::Builtin(n) => builtin(n),
            ProblemSource::Path(p) => OscillatorProblem::load(p)
                .map_err(|e| Error::Usage(format!("cannot load problem {}: {e}", p.display()))),
        }
    }

    pub fn id(&self) -> String {
        match self {
            ProblemSource::Builtin(n) => n.clone(),
            ProblemSource::Path(p) => p.display().to_string(),
        }
    }
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub problem: ProblemSource,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step_fast: f64,
    pub margin_fraction: f64,
    pub grid: ConstantGrids,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub samples: usize,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub y0: Option<f64>,
    pub w0: Option<f64>,
    pub t: Option<f64>,
    pub level: Option<f64>,
    pub well: Option<Well>,
}

const CONFIG_KEYS: [&str; 20] = [
    "command",
    "problem",
    "epsilon",
    "epsilons",
    "delta",
    "rel_tol",
    "abs_tol",
    "max_step_fast",
    "margin_fraction",
    "grid",
    "out",
    "seed",
    "samples",
    "t0",
    "t1",
    "y0",
    "w0",
    "t",
    "level",
    "well",
];

impl RunConfig {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step_fast: self.max_step_fast,
            dense_output: true,
        }
    }

    pub fn analysis(&self) -> AnalysisOptions {
        AnalysisOptions {
            solver: self.solver(),
            grids: self.grid,
            margin_fraction: self.margin_fraction,
            ..AnalysisOptions::default()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("config: {e}")))
    }

    fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return usage(format!("delta must be > 0, got {}", self.delta));
        }
        if self.epsilons.is_empty() {
            return usage("no epsilon given".into());
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e <= simulate::MAX_EPSILON) {
                return usage(format!("epsilon {e} not in (0, {}]", simulate::MAX_EPSILON));
            }
        }
        match self.command {
            CommandKind::Sweep => {
                if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                    return usage("sweep epsilons must be strictly decreasing".into());
                }
            }
            CommandKind::Simulate | CommandKind::Constants if self.epsilons.len() != 1 => {
                return usage(format!(
                    "conflicting epsilon specs: {:?}, expected one value",
                    self.epsilons
                ));
            }
            _ => {}
        }
        self.solver()
            .validate()
            .map_err(|e| Error::Usage(e.to_string()))?;
        if !(self.margin_fraction > 0.0 && self.margin_fraction < 0.25) {
            return usage(format!("margin {} not in (0, 0.25)", self.margin_fraction));
        }
        if self.grid.n_t < 2 || self.grid.n_y < 2 || self.grid.n_gamma < 2 {
            return usage("grid sizes must be at least 2".into());
        }
        if self.y0.is_some() != self.w0.is_some() {
            return usage("--y0 and --w0 go together".into());
        }
        Ok(())
    }
}

fn default_map(command: CommandKind) -> Map<String, Value> {
    let eps: Vec<f64> = if command == CommandKind::Sweep {
        DEFAULT_EPSILONS.to_vec()
    } else {
        vec![0.01]
    };
    let solver = SolverOptions::default();
    let v = serde_json::json!({
        "command": command,
        "epsilons": eps,
        "delta": DEFAULT_DELTA,
        "rel_tol": solver.rel_tol,
        "abs_tol": solver.abs_tol,
        "max_step_fast": solver.max_step_fast,
        "margin_fraction": analysis::ANALYSIS_MARGIN,
        "grid": ConstantGrids::default(),
        "out": null,
        "seed": 0,
        "samples": 256,
        "t0": null, "t1": null, "y0": null, "w0": null,
        "t": null, "level": null, "well": null,
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn read_config_file(path: &Path, command: CommandKind) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(Error::Usage("config must be a JSON object".into()));
    };
    if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Error::Usage(format!("unknown config key `{k}`")));
    }
    if let Some(c) = map.remove("command") {
        if c != serde_json::json!(command) {
            return Err(Error::Usage(format!(
                "config is for command {c}, not {command:?}"
            )));
        }
    }
    if let Some(e) = map.remove("epsilon") {
        match map.get("epsilons") {
            Some(list) if *list != Value::Array(vec![e.clone()]) => {
                return Err(Error::Usage(format!(
                    "conflicting epsilon specs: epsilon = {e}, epsilons = {list}"
                )));
            }
            _ => {
                map.insert("epsilons".into(), Value::Array(vec![e]));
            }
        }
    }
    Ok(map)
}

fn set<T: Serialize>(map: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        map.insert(key.into(), serde_json::json!(v));
    }
}

/// Resolve defaults, config file and flags into a checked [`RunConfig`].
pub fn parse_config(cli: Cli) -> Result<RunConfig> {
    let (kind, common, span, t, level, well) = match cli.command {
        Command::Check(c) => (CommandKind::Check, c, SpanArgs::default(), None, None, None),
        Command::Simulate { common, span } => {
            (CommandKind::Simulate, common, span, None, None, None)
        }
        Command::Energy {
            common,
            t,
            level,
            well,
        } => (
            CommandKind::Energy,
            common,
            SpanArgs::default(),
            t,
            level,
            well,
        ),
        Command::Constants(c) => (
            CommandKind::Constants,
            c,
            SpanArgs::default(),
            None,
            None,
            None,
        ),
        Command::Sweep(c) => (CommandKind::Sweep, c, SpanArgs::default(), None, None, None),
        Command::PhasePortrait { common, t } => (
            CommandKind::PhasePortrait,
            common,
            SpanArgs::default(),
            t,
            None,
            None,
        ),
    };
    let mut map = default_map(kind);
    if let Some(path) = &common.config {
        map.extend(read_config_file(path, kind)?);
    }
    let problem = match (&common.problem, &common.builtin) {
        (Some(_), Some(_)) => {
            return Err(Error::Usage(
                "give a problem file or --builtin, not both".into(),
            ))
        }
        (Some(p), None) => Some(ProblemSource::Path(p.clone())),
        (None, Some(b)) => Some(ProblemSource::Builtin(b.clone())),
        (None, None) => None,
    };
    set(&mut map, "problem", problem);
    if !map.contains_key("problem") {
        return Err(Error::Usage(
            "no problem given (file argument or --builtin)".into(),
        ));
    }
    set(&mut map, "epsilons", common.eps);
    set(&mut map, "delta", common.delta);
    set(&mut map, "rel_tol", common.rel_tol);
    set(&mut map, "abs_tol", common.abs_tol);
    set(&mut map, "max_step_fast", common.max_step);
    set(&mut map, "margin_fraction", common.margin);
    if let Some(g) = common.grid {
        let [n_t, n_y, n_gamma] = g[..] else {
            return Err(Error::Usage("--grid takes n_t,n_y,n_gamma".into()));
        };
        set(&mut map, "grid", Some(ConstantGrids { n_t, n_y, n_gamma }));
    }
    set(&mut map, "out", common.out);
    set(&mut map, "seed", common.seed);
    set(&mut map, "samples", common.samples);
    set(&mut map, "t0", span.t0);
    set(&mut map, "t1", span.t1);
    set(&mut map, "y0", span.y0);
    set(&mut map, "w0", span.w0);
    set(&mut map, "t", t);
    set(&mut map, "level", level);
    if let Some(w) = well {
        set(
            &mut map,
            "well",
            Some(Well::parse(&w).map_err(|e| Error::Usage(e.to_string()))?),
        );
    }
    let cfg: RunConfig = serde_json::from_value(Value::Object(map))
        .map_err(|e| Error::Usage(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse an argument vector (program name first).
pub fn parse_args<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    parse_config(cli)
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub certificate_passed: bool,
    /// JSON printed on stdout.
    pub stdout: String,
    pub written: Vec<PathBuf>,
}

struct Sink {
    dir: Option<PathBuf>,
    written: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let dir = self.dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let path = dir.join(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

/// Random spot checks of A4 on the middle chart, seeded from the config.
fn sampled_a4(
    ctx: &PotentialContext,
    geom: &Geometry,
    mani: &CriticalManifold,
    k2: &manifold::Chart,
    seed: u64,
    n: usize,
) -> Result<ValidationReport> {
    let p = ctx.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ValidationReport::new();
    for _ in 0..n {
        let t = rng.gen_range(k2.t0..=k2.t1);
        let u1 = mani.branch(p, BranchId::U1, t)?.u;
        let u2 = mani.branch(p, BranchId::U2, t)?.u;
        let u3 = mani.branch(p, BranchId::U3, t)?.u;
        let y = rng.gen_range(u3..=u1);
        let d = y - u2;
        if d.abs() < crate::energy::CHI_PUNCTURE {
            continue;
        }
        let margin = d * d * ctx.chi(geom, t, y)? + 4.0 * ctx.delta;
        if margin <= 0.0 {
            report.push(
                "A4-sampled",
                Some(Location::Point { t, y }),
                format!("(y - u2)^2 chi + 4 Delta = {margin}"),
            );
        }
    }
    Ok(report)
}

#[derive(Serialize)]
struct CheckReport {
    problem: String,
    passed: bool,
    folds: Option<[manifold::Fold; 2]>,
    report: ValidationReport,
}

fn cmd_check(cfg: &RunConfig, p: &OscillatorProblem, sink: &mut Sink) -> Result<Outcome> {
    let mut report = p.validate(256)?;
    let ctx = PotentialContext::new(p, cfg.delta)?;
    let mut folds = None;
    match CriticalManifold::new(p) {
        Ok(m) => {
            report.merge(manifold::check_a1_a3(p, &m, 512)?);
            folds = Some([m.fold_min, m.fold_max]);
            let geom = Geometry::Folded(m.clone());
            let charts = geom.build_charts(p, cfg.margin_fraction)?;
            report.merge(ctx.check_a4(&geom, &charts, cfg.grid.n_t, cfg.grid.n_y)?);
            if let Some(k2) = charts.get(ChartId::K2) {
                report.merge(sampled_a4(&ctx, &geom, &m, k2, cfg.seed, cfg.samples)?);
            }
            if cfg.out.is_some() {
                let rows = manifold::sample(p, &m, 401)?;
                sink.csv("manifold.csv", |b| output::write_manifold_csv(b, &rows))?;
            }
        }
        Err(Error::AssumptionA1Violated(msg)) => report.push("A1", None, msg),
        Err(e) => return Err(e),
    }
    let doc = output::to_json(
        "check",
        &CheckReport {
            problem: cfg.problem.id(),
            passed: report.passed,
            folds,
            report: report.clone(),
        },
    )?;
    if cfg.out.is_some() {
        sink.write("check.json", doc.as_bytes())?;
    }
    Ok(Outcome {
        certificate_passed: report.passed,
        stdout: doc,
        written: Vec::new(),
    })
}

#[derive(Serialize)]
struct SimulateSummary {
    epsilon: f64,
    t0: f64,
    t1: f64,
    y0: f64,
    w0: f64,
    steps: usize,
    events: usize,
    tangential: usize,
    alternating: bool,
}

fn cmd_simulate(cfg: &RunConfig, p: &OscillatorProblem, sink: &mut Sink) -> Result<Outcome> {
    let eps = cfg.epsilons[0];
    let t0 = cfg.t0.unwrap_or(p.t_begin);
    let t1 = cfg.t1.unwrap_or(p.t_end);
    let ctx = PotentialContext::new(p, cfg.delta)?;
    let geom = Geometry::analyze(p)?;
    let (y0, w0) = match (cfg.y0, cfg.w0) {
        (Some(y), Some(w)) => (y, w),
        _ => simulate::standard_initial_condition(&ctx, &geom, t0)?,
    };
    let mut traj = simulate::integrate(p, eps, y0, w0, (t0, t1), &cfg.solver())?;
    let charts = geom.build_charts(p, cfg.margin_fraction)?;
    let mut tangential = 0;
    let mut alternating = true;
    for c in &charts.charts {
        let (lo, hi) = (c.t0.max(t0), c.t1.min(t1));
        if lo < hi {
            let scan = simulate::detect_crossings(&traj, p, &c.branch, (lo, hi))?;
            alternating &= simulate::alternates(&scan.events);
            tangential += scan.tangential;
            traj.events.extend(scan.events);
        }
    }
    traj.events.sort_by(|a, b| a.t_star.total_cmp(&b.t_star));
    sink.csv("trajectory.csv", |b| {
        output::write_trajectory_csv(b, p, &traj)
    })?;
    sink.csv("events.csv", |b| output::write_events_csv(b, &traj.events))?;
    let doc = output::to_json(
        "simulate",
        &SimulateSummary {
            epsilon: eps,
            t0,
            t1,
            y0,
            w0,
            steps: traj.steps(),
            events: traj.events.len(),
            tangential,
            alternating,
        },
    )?;
    Ok(Outcome {
        certificate_passed: true,
        stdout: doc,
        written: Vec::new(),
    })
}

#[derive(Serialize)]
struct EnergyReport {
    t: f64,
    level: f64,
    well: Well,
    turning_points: crate::energy::TurningPoints,
    action: f64,
    omega: f64,
    period: f64,
    a4: ValidationReport,
}

fn cmd_energy(cfg: &RunConfig, p: &OscillatorProblem, sink: &mut Sink) -> Result<Outcome> {
    let t = cfg
        .t
        .ok_or_else(|| Error::Usage("energy needs --t".into()))?;
    if !p.contains(t) {
        return Err(Error::Usage(format!(
            "t = {t} outside [{}, {}]",
            p.t_begin, p.t_end
        )));
    }
    let ctx = PotentialContext::new(p, cfg.delta)?;
    let geom = Geometry::analyze(p)?;
    let level = match cfg.level {
        Some(l) => l,
        None => ctx.base_level(&geom, t)? + cfg.delta,
    };
    let well = cfg.well.unwrap_or(Well::Outer);
    let af = ctx.action_frequency(t, level, well)?;
    let charts = geom.build_charts(p, cfg.margin_fraction)?;
    let a4 = ctx.check_a4(&geom, &charts, cfg.grid.n_t, cfg.grid.n_y)?;
    let passed = a4.passed;
    let doc = output::to_json(
        "energy",
        &EnergyReport {
            t,
            level,
            well,
            turning_points: af.orbit,
            action: af.action,
            omega: af.omega,
            period: af.period,
            a4,
        },
    )?;
    if cfg.out.is_some() {
        sink.write("energy.json", doc.as_bytes())?;
    }
    Ok(Outcome {
        certificate_passed: passed,
        stdout: doc,
        written: Vec::new(),
    })
}

#[derive(Serialize)]
struct ConstantsEntry {
    chart: ChartId,
    constants: Option<polar::ChartConstants>,
    error: Option<String>,
}

fn cmd_constants(cfg: &RunConfig, p: &OscillatorProblem, sink: &mut Sink) -> Result<Outcome> {
    let eps = cfg.epsilons[0];
    let ctx = PotentialContext::new(p, cfg.delta)?;
    let geom = Geometry::analyze(p)?;
    let charts = geom.build_charts(p, cfg.margin_fraction)?;
    let mut ok = true;
    let entries: Vec<ConstantsEntry> = charts
        .charts
        .iter()
        .map(
            |c| match polar::chart_constants(&ctx, &geom, c, eps, cfg.grid) {
                Ok(k) => Ok(ConstantsEntry {
                    chart: c.id,
                    constants: Some(k),
                    error: None,
                }),
                Err(e @ Error::EpsilonTooLarge { .. }) => {
                    ok = false;
                    Ok(ConstantsEntry {
                        chart: c.id,
                        constants: None,
                        error: Some(e.to_string()),
                    })
                }
                Err(e) => Err(e),
            },
        )
        .collect::<Result<_>>()?;
    let doc = output::to_json("constants", &entries)?;
    if cfg.out.is_some() {
        sink.write("constants.json", doc.as_bytes())?;
    }
    Ok(Outcome {
        certificate_passed: ok,
        stdout: doc,
        written: Vec::new(),
    })
}

/// Default frozen times: `-0.5, t_min, 0, t_max, 0.5` inside the interval.
pub fn portrait_times(p: &OscillatorProblem, geom: &Geometry) -> Vec<f64> {
    let mut ts = vec![-0.5];
    if let Some(m) = geom.manifold() {
        ts.push(m.t_min);
    }
    ts.push(0.0);
    if let Some(m) = geom.manifold() {
        ts.push(m.t_max);
    }
    ts.push(0.5);
    ts.retain(|&t| p.contains(t));
    if ts.is_empty() {
        ts.push(0.5 * (p.t_begin + p.t_end));
    }
    ts
}

pub fn portrait_file_name(t: f64) -> String {
    format!("phase_t{t:.4}.svg")
}

fn write_portraits(
    ctx: &PotentialContext,
    geom: &Geometry,
    times: &[f64],
    sink: &mut Sink,
) -> Result<()> {
    for &t in times {
        let svg = output::phase_portrait_svg(ctx, geom, t)?;
        sink.write(&portrait_file_name(t), svg.as_bytes())?;
    }
    Ok(())
}

fn cmd_phase(cfg: &RunConfig, p: &OscillatorProblem, sink: &mut Sink) -> Result<Outcome> {
    let ctx = PotentialContext::new(p, cfg.delta)?;
    let geom = Geometry::analyze(p)?;
    let times = match cfg.t {
        Some(t) if p.contains(t) => vec![t],
        Some(t) => {
            return Err(Error::Usage(format!(
                "t = {t} outside [{}, {}]",
                p.t_begin, p.t_end
            )))
        }
        None => portrait_times(p, &geom),
    };
    write_portraits(&ctx, &geom, &times, sink)?;
    Ok(Outcome {
        certificate_passed: true,
        stdout: String::new(),
        written: Vec::new(),
    })
}

fn cmd_sweep(cfg: &RunConfig, p: &OscillatorProblem, sink: &mut Sink) -> Result<Outcome> {
    let opts = cfg.analysis();
    let sweep = analysis::run_sweep(&cfg.problem.id(), p, &cfg.epsilons, cfg.delta, &opts)?;
    sink.csv("sweep.csv", |b| output::write_sweep_csv(b, &sweep))?;
    sink.csv("ratios.csv", |b| output::write_ratios_csv(b, &sweep))?;
    let doc = output::to_json("sweep", &sweep)?;
    sink.write("sweep.json", doc.as_bytes())?;
    sink.write("config.json", cfg.to_json()?.as_bytes())?;

    let ctx = PotentialContext::new(p, cfg.delta)?;
    let geom = Geometry::analyze(p)?;
    sink.write("manifold.svg", output::manifold_svg(p, &geom)?.as_bytes())?;
    write_portraits(&ctx, &geom, &portrait_times(p, &geom), sink)?;
    let charts = geom.build_charts(p, cfg.margin_fraction)?;
    let eps = *cfg.epsilons.last().unwrap();
    let runs: Vec<_> = charts
        .charts
        .iter()
        .filter_map(|c| analysis::run_chart(&ctx, &geom, c, eps, &opts).ok())
        .collect();
    sink.write(
        "oscillations.svg",
        output::oscillations_svg(p, geom.manifold(), &runs)?.as_bytes(),
    )?;
    Ok(Outcome {
        certificate_passed: !sweep.failed(),
        stdout: doc,
        written: Vec::new(),
    })
}

/// Run a resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.problem.load()?;
    let mut sink = Sink::new(cfg.out.clone())?;
    let mut out = match cfg.command {
        CommandKind::Check => cmd_check(cfg, &p, &mut sink),
        CommandKind::Simulate => cmd_simulate(cfg, &p, &mut sink),
        CommandKind::Energy => cmd_energy(cfg, &p, &mut sink),
        CommandKind::Constants => cmd_constants(cfg, &p, &mut sink),
        CommandKind::Sweep => cmd_sweep(cfg, &p, &mut sink),
        CommandKind::PhasePortrait => cmd_phase(cfg, &p, &mut sink),
    }?;
    out.written = sink.written;
    Ok(out)
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Usage(_)
            | Error::UnknownInstance(_)
            | Error::InvalidDelta(_)
            | Error::InvalidFunction(_)
    )
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("SPDUFF_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Usage(format!(
            "SPDUFF_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads()
        .and_then(|_| parse_config(cli))
        .and_then(|cfg| execute(&cfg));
    match result {
        Ok(out) => {
            print!("{}", out.stdout);
            for w in &out.written {
                eprintln!("wrote {}", w.display());
            }
            if out.certificate_passed {
                EXIT_OK
            } else {
                EXIT_CERTIFICATE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_CERTIFICATE
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_flags() {
        let c = parse_args(["spduff", "sweep", "--builtin", "D1", "--eps", "0.02,0.01"]).unwrap();
        assert_eq!(c.epsilons, vec![0.02, 0.01]);
        assert_eq!(c.command, CommandKind::Sweep);
        assert_eq!(c.problem, ProblemSource::Builtin("D1".into()));
    }

    #[test]
    fn usage_errors() {
        for args in [
            vec!["spduff", "sweep", "--builtin", "D1", "--eps", "0.01,0.02"],
            vec![
                "spduff",
                "constants",
                "--builtin",
                "D1",
                "--eps",
                "0.01,0.02",
            ],
            vec!["spduff", "sweep", "--builtin", "D1", "--delta", "0"],
            vec!["spduff", "sweep"],
            vec!["spduff", "bogus"],
        ] {
            assert!(matches!(parse_args(args), Err(Error::Usage(_))));
        }
    }

    #[test]
    fn config_round_trip() {
        let c = parse_args([
            "spduff",
            "simulate",
            "--builtin",
            "D0",
            "--t0",
            "0.1",
            "--y0",
            "-1",
            "--w0",
            "0",
        ])
        .unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json().unwrap()).unwrap(), c);
    }
}
