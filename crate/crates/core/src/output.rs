//! CSV, JSON and SVG emitters.
//!
//! Floats in CSV use 17 significant digits. JSON documents are wrapped with
//! a `schema_version`.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::analysis::{ChartRun, SweepResult};
use crate::energy::PotentialContext;
use crate::error::Result;
use crate::manifold::{self, BranchId, CriticalManifold, Geometry};
use crate::problem::OscillatorProblem;
use crate::simulate::{CrossingEvent, Direction, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn write_trajectory_csv(
    out: &mut impl Write,
    p: &OscillatorProblem,
    traj: &Trajectory,
) -> Result<()> {
    writeln!(out, "t,y,w,H")?;
    for s in &traj.samples {
        let h = 0.5 * s.w * s.w + p.f.antiderivative(s.y) - p.m.value(s.t) * s.y;
        writeln!(
            out,
            "{},{},{},{}",
            float(s.t),
            float(s.y),
            float(s.w),
            float(h)
        )?;
    }
    Ok(())
}

pub fn write_events_csv(out: &mut impl Write, events: &[CrossingEvent]) -> Result<()> {
    writeln!(out, "branch,t_star,direction,residual")?;
    for e in events {
        let dir = match e.direction {
            Direction::Up => "up",
            Direction::Down => "down",
        };
        writeln!(
            out,
            "{},{},{},{}",
            e.branch.index(),
            float(e.t_star),
            dir,
            float(e.residual)
        )?;
    }
    Ok(())
}

pub fn write_manifold_csv(out: &mut impl Write, rows: &[(f64, [Option<f64>; 3])]) -> Result<()> {
    writeln!(out, "t,u1,u2,u3")?;
    for (t, u) in rows {
        writeln!(
            out,
            "{},{},{},{}",
            float(*t),
            opt_float(u[0]),
            opt_float(u[1]),
            opt_float(u[2])
        )?;
    }
    Ok(())
}

pub fn write_energy_csv(
    out: &mut impl Write,
    rows: &[crate::simulate::EnergySample],
) -> Result<()> {
    writeln!(out, "t,H,residual")?;
    for r in rows {
        writeln!(out, "{},{},{}", float(r.t), float(r.h), float(r.residual))?;
    }
    Ok(())
}

pub fn write_sweep_csv(out: &mut impl Write, sweep: &SweepResult) -> Result<()> {
    writeln!(
        out,
        "epsilon,chart,z,s_max,bound,envelope_sup_error,converged_envelope_error"
    )?;
    for e in &sweep.entries {
        for r in &e.reports {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                float(e.epsilon),
                r.chart_id,
                r.zero_count,
                float(r.max_spacing),
                float(r.bound),
                float(r.envelope_sup_error),
                float(r.converged_envelope_error)
            )?;
        }
    }
    Ok(())
}

pub fn write_ratios_csv(out: &mut impl Write, sweep: &SweepResult) -> Result<()> {
    writeln!(out, "chart,epsilon,ratio")?;
    for r in &sweep.ratios {
        writeln!(
            out,
            "{},{},{}",
            r.chart_id,
            float(r.epsilon),
            float(r.ratio)
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    data: &'a T,
}

/// Pretty JSON document `{schema_version, kind, data}`.
pub fn to_json<T: Serialize>(kind: &str, data: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        data,
    })?;
    s.push('\n');
    Ok(s)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f",
];

struct Series {
    points: Vec<(f64, f64)>,
    color: &'static str,
    width: f64,
    dashed: bool,
    label: String,
}

/// One set of axes.
pub struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    markers: Vec<(f64, f64, &'static str)>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            markers: Vec::new(),
        }
    }

    pub fn line(&mut self, label: &str, points: Vec<(f64, f64)>, color: usize) -> &mut Self {
        self.push(label, points, color, 1.5, false)
    }

    pub fn dashed(&mut self, label: &str, points: Vec<(f64, f64)>, color: usize) -> &mut Self {
        self.push(label, points, color, 1.0, true)
    }

    fn push(
        &mut self,
        label: &str,
        points: Vec<(f64, f64)>,
        color: usize,
        width: f64,
        dashed: bool,
    ) -> &mut Self {
        let points: Vec<_> = points
            .into_iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        if !points.is_empty() {
            self.series.push(Series {
                points,
                color: PALETTE[color % PALETTE.len()],
                width,
                dashed,
                label: label.into(),
            });
        }
        self
    }

    pub fn marker(&mut self, x: f64, y: f64) -> &mut Self {
        self.markers.push((x, y, "#000000"));
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        let all = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(self.markers.iter().map(|m| (m.0, m.1)));
        for (x, y) in all {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let w = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.05 * w, hi + 0.05 * w)
        };
        let (x0, x1) = pad(b.0, b.1);
        let (y0, y1) = pad(b.2, b.3);
        (x0, x1, y0, y1)
    }

    fn render(&self, svg: &mut String, ox: f64, oy: f64, w: f64, h: f64) {
        let (ml, mr, mt, mb) = (60.0, 15.0, 30.0, 45.0);
        let (pw, ph) = (w - ml - mr, h - mt - mb);
        let (x0, x1, y0, y1) = self.bounds();
        let sx = |x: f64| ox + ml + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| oy + mt + (y1 - y) / (y1 - y0) * ph;
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#000000"/>"##,
            ox + ml,
            oy + mt
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
                sx(fx),
                oy + mt + ph + 14.0,
                tick(fx)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
                ox + ml - 4.0,
                sy(fy) + 3.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            ox + ml + pw / 2.0,
            oy + h - 8.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            ox + 14.0,
            oy + mt + ph / 2.0,
            ox + 14.0,
            oy + mt + ph / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            ox + ml + pw / 2.0,
            oy + 18.0,
            escape(&self.title)
        );
        for s in &self.series {
            let mut d = String::new();
            for (k, &(x, y)) in s.points.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2}",
                    if k == 0 { "M" } else { " L" },
                    sx(x),
                    sy(y)
                );
            }
            let dash = if s.dashed {
                r#" stroke-dasharray="4,3""#
            } else {
                ""
            };
            let _ = writeln!(
                svg,
                r#"<path d="{d}" fill="none" stroke="{}" stroke-width="{}"{dash}><title>{}</title></path>"#,
                s.color,
                s.width,
                escape(&s.label)
            );
        }
        for &(x, y, c) in &self.markers {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#,
                sx(x),
                sy(y)
            );
        }
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e4) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Panels laid out left to right.
pub fn render_svg(panels: &[Panel]) -> String {
    let (w, h) = (420.0, 320.0);
    let total = w * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{h}" viewBox="0 0 {total} {h}">"#
    );
    let _ = writeln!(svg, "<!-- spduff {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    for (k, p) in panels.iter().enumerate() {
        let _ = writeln!(svg, r#"<g class="panel">"#);
        p.render(&mut svg, w * k as f64, 0.0, w, h);
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

/// Branches of the critical manifold with the folds marked.
pub fn manifold_svg(p: &OscillatorProblem, geom: &Geometry) -> Result<String> {
    let mut panel = Panel::new("critical manifold f(y) = m(t)", "t", "y");
    match geom {
        Geometry::Folded(m) => {
            let rows = manifold::sample(p, m, 400)?;
            for (k, id) in [BranchId::U1, BranchId::U2, BranchId::U3]
                .into_iter()
                .enumerate()
            {
                let pts = rows
                    .iter()
                    .filter_map(|(t, u)| u[k].map(|v| (*t, v)))
                    .collect();
                panel.line(&id.to_string(), pts, k);
            }
            panel.marker(m.fold_min.t_at_fold, m.fold_min.y_at_fold);
            panel.marker(m.fold_max.t_at_fold, m.fold_max.y_at_fold);
        }
        Geometry::Monotone(b) => {
            let pts = (0..400)
                .map(|k| {
                    let t = p.t_begin + p.length() * k as f64 / 399.0;
                    Ok((t, b.value(p, t)?))
                })
                .collect::<Result<_>>()?;
            panel.line("u", pts, 0);
        }
    }
    Ok(render_svg(&[panel]))
}

/// Frozen-time picture at `t`: `f - m`, the potential and the phase curve of
/// the level `H0(t) + Delta`.
pub fn phase_portrait_svg(ctx: &PotentialContext, geom: &Geometry, t: f64) -> Result<String> {
    let level = ctx.base_level(geom, t)? + ctx.delta;
    let tp = ctx.turning_points(t, level)?;
    let width = tp.y_right - tp.y_left;
    let (lo, hi) = (tp.y_left - 0.15 * width, tp.y_right + 0.15 * width);
    let ys: Vec<f64> = (0..=400)
        .map(|k| lo + (hi - lo) * k as f64 / 400.0)
        .collect();
    let crit = ctx.critical_points(t);

    let mut force = Panel::new(&format!("f(y) - m(t), t = {t:.4}"), "y", "f - m");
    force.line(
        "f - m",
        ys.iter().map(|&y| (y, ctx.force(t, y))).collect(),
        0,
    );
    force.dashed("0", vec![(lo, 0.0), (hi, 0.0)], 5);
    let mut pot = Panel::new(&format!("V(t, y), t = {t:.4}"), "y", "V");
    pot.line(
        "V",
        ys.iter().map(|&y| (y, ctx.potential(t, y))).collect(),
        1,
    );
    pot.dashed("H0 + Delta", vec![(lo, level), (hi, level)], 5);
    for &y in &crit {
        force.marker(y, 0.0);
        pot.marker(y, ctx.potential(t, y));
    }

    let mut phase = Panel::new(&format!("phase curve, t = {t:.4}"), "y", "w");
    let n = 400;
    let upper: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let y = tp.y_left + width * k as f64 / n as f64;
            (y, (2.0 * (level - ctx.potential(t, y))).max(0.0).sqrt())
        })
        .collect();
    let mut closed = upper.clone();
    closed.extend(upper.iter().rev().map(|&(y, w)| (y, -w)));
    phase.line("H = H0 + Delta", closed, 2);
    for &y in &crit {
        phase.marker(y, 0.0);
    }
    Ok(render_svg(&[force, pot, phase]))
}

/// Trajectories per chart with measured envelopes and reference branches.
pub fn oscillations_svg(
    p: &OscillatorProblem,
    mani: Option<&CriticalManifold>,
    runs: &[ChartRun],
) -> Result<String> {
    let eps = runs.first().map(|r| r.report.epsilon).unwrap_or(f64::NAN);
    let mut panel = Panel::new(&format!("oscillations, eps = {eps}"), "t", "y");
    for (k, run) in runs.iter().enumerate() {
        let id = run.report.chart_id;
        let pts = run.trajectory.samples.iter().map(|s| (s.t, s.y)).collect();
        panel.line(&format!("y on {id}"), pts, k);
        panel.dashed(
            &format!("y_R on {id}"),
            run.envelope.iter().map(|e| (e.t, e.y_right)).collect(),
            5,
        );
        panel.dashed(
            &format!("y_L on {id}"),
            run.envelope.iter().map(|e| (e.t, e.y_left)).collect(),
            5,
        );
    }
    if let Some(m) = mani {
        let rows = manifold::sample(p, m, 400)?;
        for (k, id) in [BranchId::U1, BranchId::U2, BranchId::U3]
            .into_iter()
            .enumerate()
        {
            let pts = rows
                .iter()
                .filter_map(|(t, u)| u[k].map(|v| (*t, v)))
                .collect();
            panel.dashed(&id.to_string(), pts, 4);
        }
    }
    Ok(render_svg(&[panel]))
}
