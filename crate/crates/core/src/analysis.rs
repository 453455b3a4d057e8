//! Per-chart oscillation reports and epsilon sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::PotentialContext;
use crate::error::{Error, Result};
use crate::manifold::{BranchId, Chart, ChartId, ChartPartition, Geometry};
use crate::polar::{self, ChartConstants, ConstantGrids};
use crate::problem::OscillatorProblem;
use crate::simulate::{self, CrossingEvent, SolverOptions, Trajectory};

pub const DEFAULT_EPSILONS: [f64; 3] = [0.02, 0.01, 0.005];
pub const ANALYSIS_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub solver: SolverOptions,
    pub grids: ConstantGrids,
    pub margin_fraction: f64,
    /// Uniform sample count for envelope curves.
    pub envelope_samples: usize,
    /// Interior points per step for angle checks.
    pub angle_subdivisions: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            solver: SolverOptions::default(),
            grids: ConstantGrids::default(),
            margin_fraction: ANALYSIS_MARGIN,
            envelope_samples: 256,
            angle_subdivisions: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub t: f64,
    /// Measured energy.
    pub h: f64,
    /// `H0 + Delta`.
    pub level: f64,
    pub y_left: f64,
    pub y_right: f64,
    pub y_left0: f64,
    pub y_right0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartOscillationReport {
    pub chart_id: ChartId,
    pub branch: BranchId,
    pub epsilon: f64,
    pub c: f64,
    pub zero_count: usize,
    /// Largest gap between successive zeros, 0 with fewer than two.
    pub max_spacing: f64,
    /// `eps * pi / c`.
    pub bound: f64,
    /// Window extrema against the measured-energy turning points.
    pub envelope_sup_error: f64,
    /// Measured-energy turning points against those of `H0 + Delta`.
    pub converged_envelope_error: f64,
    pub tangential: usize,
    pub alternating: bool,
    pub gamma_increasing: bool,
    /// Smallest `gamma' * eps / c` over the sampled states.
    pub min_rate_ratio: f64,
    pub r_min: f64,
    pub r_observed_min: f64,
}

impl ChartOscillationReport {
    pub fn spacing_ok(&self) -> bool {
        self.max_spacing <= self.bound
    }

    /// Spacing bound, alternation and angle monotonicity.
    pub fn passed(&self) -> bool {
        self.spacing_ok() && self.alternating && self.gamma_increasing
    }
}

/// Report plus the data it was computed from.
#[derive(Clone, Debug)]
pub struct ChartRun {
    pub report: ChartOscillationReport,
    pub constants: ChartConstants,
    pub trajectory: Trajectory,
    pub events: Vec<CrossingEvent>,
    pub envelope: Vec<EnvelopePoint>,
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn energy(p: &OscillatorProblem, t: f64, y: f64, w: f64) -> f64 {
    0.5 * w * w + p.f.antiderivative(y) - p.m.value(t) * y
}

/// Extremum of `y` on `[lo, hi]`, a maximum when `upper`.
fn window_extremum(traj: &Trajectory, lo: f64, hi: f64, upper: bool) -> Result<(f64, f64)> {
    let s = if upper { 1.0 } else { -1.0 };
    let g = |t: f64| -> Result<f64> { Ok(s * traj.state_at(t)?[0]) };
    let ts = uniform(lo, hi, 17);
    let vals: Vec<f64> = ts.iter().map(|&t| g(t)).collect::<Result<_>>()?;
    let k = (0..ts.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let (mut a, mut b) = (ts[k.saturating_sub(1)], ts[(k + 1).min(ts.len() - 1)]);
    // golden section
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
    let (mut g1, mut g2) = (g(x1)?, g(x2)?);
    for _ in 0..80 {
        if b - a <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2)?;
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1)?;
        }
    }
    let t = 0.5 * (a + b);
    let (t, v) =
        [(t, g(t)?), (ts[k], vals[k])]
            .into_iter()
            .fold((f64::NAN, f64::NEG_INFINITY), |acc, x| {
                if x.1 > acc.1 {
                    x
                } else {
                    acc
                }
            });
    Ok((t, s * v))
}

/// Integrate over one chart from the standard start and measure everything.
pub fn run_chart(
    ctx: &PotentialContext,
    geom: &Geometry,
    chart: &Chart,
    epsilon: f64,
    opts: &AnalysisOptions,
) -> Result<ChartRun> {
    let p = ctx.problem;
    let constants = polar::chart_constants(ctx, geom, chart, epsilon, opts.grids)?;
    let (y0, w0) = simulate::standard_initial_condition(ctx, geom, chart.t0)?;
    let solver = SolverOptions {
        dense_output: true,
        ..opts.solver
    };
    let mut traj = simulate::integrate(p, epsilon, y0, w0, (chart.t0, chart.t1), &solver)?;
    let branch = &chart.branch;
    let scan = simulate::detect_crossings(&traj, p, branch, (chart.t0, chart.t1))?;
    let events = scan.events;
    traj.events = events.clone();

    let max_spacing = events
        .windows(2)
        .map(|w| w[1].t_star - w[0].t_star)
        .fold(0.0, f64::max);

    let mut envelope_sup_error: f64 = 0.0;
    for w in events.windows(2) {
        let (lo, hi) = (w[0].t_star, w[1].t_star);
        let mid = 0.5 * (lo + hi);
        let upper = traj.state_at(mid)?[0] >= branch.value(p, mid)?;
        let (te, ye) = window_extremum(&traj, lo, hi, upper)?;
        let [y, w] = traj.state_at(te)?;
        let tp = ctx.turning_points(te, energy(p, te, y, w))?;
        let target = if upper { tp.y_right } else { tp.y_left };
        envelope_sup_error = envelope_sup_error.max((ye - target).abs());
    }

    let envelope = uniform(chart.t0, chart.t1, opts.envelope_samples)
        .into_iter()
        .map(|t| {
            let [y, w] = traj.state_at(t)?;
            let h = energy(p, t, y, w);
            let level = ctx.base_level(geom, t)? + ctx.delta;
            let eps_tp = ctx.turning_points(t, h)?;
            let tp0 = ctx.turning_points(t, level)?;
            Ok(EnvelopePoint {
                t,
                h,
                level,
                y_left: eps_tp.y_left,
                y_right: eps_tp.y_right,
                y_left0: tp0.y_left,
                y_right0: tp0.y_right,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let converged_envelope_error = envelope
        .iter()
        .map(|e| {
            (e.y_right - e.y_right0)
                .abs()
                .max((e.y_left - e.y_left0).abs())
        })
        .fold(0.0, f64::max);

    // polar angle on step ends and interior points
    let mut times = Vec::with_capacity(traj.samples.len() * (opts.angle_subdivisions + 1));
    for w in traj.samples.windows(2) {
        let (a, b) = (w[0].t, w[1].t);
        times.push(a);
        for k in 1..=opts.angle_subdivisions {
            times.push(a + (b - a) * k as f64 / (opts.angle_subdivisions + 1) as f64);
        }
    }
    times.push(traj.t_end());
    let mut gammas = Vec::with_capacity(times.len());
    let mut min_rate = f64::INFINITY;
    let mut r_observed_min = f64::INFINITY;
    for &t in &times {
        let [y, w] = traj.state_at(t)?;
        let s = polar::to_polar_w(p, branch, t, y, w)?;
        r_observed_min = r_observed_min.min(s.r);
        gammas.push(s.gamma);
        min_rate = min_rate.min(polar::gamma_rate(p, branch, epsilon, t, s)?);
    }
    polar::unwrap_angles(&mut gammas);
    let gamma_increasing = gammas.windows(2).all(|g| g[1] > g[0]);

    let report = ChartOscillationReport {
        chart_id: chart.id,
        branch: branch.id,
        epsilon,
        c: constants.c,
        zero_count: events.len(),
        max_spacing,
        bound: epsilon * std::f64::consts::PI / constants.c,
        envelope_sup_error,
        converged_envelope_error,
        tangential: scan.tangential,
        alternating: simulate::alternates(&events),
        gamma_increasing,
        min_rate_ratio: min_rate * epsilon / constants.c,
        r_min: constants.r_min,
        r_observed_min,
    };
    Ok(ChartRun {
        report,
        constants,
        trajectory: traj,
        events,
        envelope,
    })
}

/// Reports for every chart at one epsilon.
pub fn oscillation_report(
    ctx: &PotentialContext,
    geom: &Geometry,
    charts: &ChartPartition,
    epsilon: f64,
    opts: &AnalysisOptions,
) -> Result<Vec<ChartOscillationReport>> {
    charts
        .charts
        .par_iter()
        .map(|c| run_chart(ctx, geom, c, epsilon, opts).map(|r| r.report))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub reports: Vec<ChartOscillationReport>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRatio {
    pub chart_id: ChartId,
    /// The smaller epsilon of the pair.
    pub epsilon: f64,
    /// `z(epsilon) / z(2 epsilon)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub problem: String,
    pub delta: f64,
    pub entries: Vec<SweepEntry>,
    pub ratios: Vec<ScalingRatio>,
}

impl SweepResult {
    pub fn report(&self, epsilon: f64, chart: ChartId) -> Option<&ChartOscillationReport> {
        self.entries
            .iter()
            .find(|e| e.epsilon == epsilon)?
            .reports
            .iter()
            .find(|r| r.chart_id == chart)
    }

    pub fn failed(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.error.is_some() || e.reports.iter().any(|r| !r.passed()))
    }
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon list".into()));
    }
    for &e in eps {
        if !(e > 0.0 && e <= simulate::MAX_EPSILON) {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {e} not in (0, {}]",
                simulate::MAX_EPSILON
            )));
        }
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "epsilon list must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Run every epsilon on one shared chart partition.
pub fn run_sweep(
    problem_id: &str,
    p: &OscillatorProblem,
    epsilons: &[f64],
    delta: f64,
    opts: &AnalysisOptions,
) -> Result<SweepResult> {
    check_epsilons(epsilons)?;
    let ctx = PotentialContext::new(p, delta)?;
    let geom = Geometry::analyze(p)?;
    let charts = geom.build_charts(p, opts.margin_fraction)?;
    let entries: Vec<SweepEntry> = epsilons
        .par_iter()
        .map(
            |&eps| match oscillation_report(&ctx, &geom, &charts, eps, opts) {
                Ok(reports) => SweepEntry {
                    epsilon: eps,
                    reports,
                    error: None,
                },
                Err(e) => SweepEntry {
                    epsilon: eps,
                    reports: Vec::new(),
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    let mut ratios = Vec::new();
    for w in entries.windows(2) {
        if ((w[0].epsilon - 2.0 * w[1].epsilon) / w[0].epsilon).abs() > 1e-9 {
            continue;
        }
        for r in &w[1].reports {
            if let Some(prev) = w[0].reports.iter().find(|q| q.chart_id == r.chart_id) {
                ratios.push(ScalingRatio {
                    chart_id: r.chart_id,
                    epsilon: r.epsilon,
                    ratio: r.zero_count as f64 / prev.zero_count as f64,
                });
            }
        }
    }
    Ok(SweepResult {
        problem: problem_id.to_string(),
        delta,
        entries,
        ratios,
    })
}

/// `(epsilon, converged_envelope_error)` in sweep order.
pub fn envelope_convergence(sweep: &SweepResult, chart: ChartId) -> Result<Vec<(f64, f64)>> {
    if sweep.entries.len() < 2 {
        return Err(Error::NeedsSweep);
    }
    Ok(sweep
        .entries
        .iter()
        .filter_map(|e| {
            e.reports
                .iter()
                .find(|r| r.chart_id == chart)
                .map(|r| (e.epsilon, r.converged_envelope_error))
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorMismatch {
    /// `sup |y_R(t) + y_L'(-t)| / |y_R(t)|` over both envelope pairs.
    pub value_relative: f64,
    /// The same differences over the half-width `(y_R - y_L) / 2`.
    pub amplitude_relative: f64,
}

/// Compare an envelope with the image of another under `(t, y) -> (-t, -y)`.
pub fn mirror_mismatch(a: &[EnvelopePoint], b: &[EnvelopePoint]) -> Result<MirrorMismatch> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(
            "envelopes must have equal, nonzero length".into(),
        ));
    }
    let mut out = MirrorMismatch {
        value_relative: 0.0,
        amplitude_relative: 0.0,
    };
    for (x, y) in a.iter().zip(b.iter().rev()) {
        if (x.t + y.t).abs() > 1e-9 * (1.0 + x.t.abs()) {
            return Err(Error::InvalidArgument(format!(
                "envelope times {} and {} are not mirror images",
                x.t, y.t
            )));
        }
        let half = 0.5 * (x.y_right - x.y_left);
        let dr = (x.y_right + y.y_left).abs();
        let dl = (x.y_left + y.y_right).abs();
        out.value_relative = out
            .value_relative
            .max(dr / x.y_right.abs())
            .max(dl / x.y_left.abs());
        out.amplitude_relative = out.amplitude_relative.max(dr.max(dl) / half);
    }
    Ok(out)
}
