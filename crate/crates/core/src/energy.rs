//! Potential `V(t, y) = F(y) - m(t) y`, turning points, the `chi` criterion
//! for the middle chart and frozen-time action/frequency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{state_bracket, BranchId, ChartId, ChartPartition, Geometry};
use crate::problem::{Location, OscillatorProblem, ValidationReport};
use crate::quadrature::{gl16, gl8};
use crate::roots::{expand_until, newton_bisect, sign_changes};

/// Default energy offset above the base level.
pub const DEFAULT_DELTA: f64 = 0.05;
/// Distance to a barrier top below which a level counts as a separatrix.
pub const SEPARATRIX_TOL: f64 = 1e-10;
/// `|y - u2|` below which `chi` returns its limit 0.
pub const CHI_PUNCTURE: f64 = 1e-6;

/// Potential evaluation for one problem at a fixed energy offset.
///
/// The critical points of `f` are located once; every later root search for
/// `f(y) = m(t)` or `V(t, y) = level` then runs on monotone segments.
#[derive(Clone, Debug)]
pub struct PotentialContext<'a> {
    pub problem: &'a OscillatorProblem,
    pub delta: f64,
    window: (f64, f64),
    f_crit: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    pub y_left: f64,
    pub y_right: f64,
    pub level: f64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Well {
    Left,
    Right,
    /// Level set surrounding every well.
    Outer,
}

impl Well {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Well::Left),
            "right" => Ok(Well::Right),
            "outer" => Ok(Well::Outer),
            _ => Err(Error::InvalidArgument(format!("unknown well `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionFrequency {
    pub action: f64,
    pub omega: f64,
    pub period: f64,
    pub orbit: TurningPoints,
}

/// Zeros of `g` on `[lo, hi]` where `g` is monotone, plus the open ends.
fn monotone_root(g: &impl Fn(f64) -> (f64, f64), lo: f64, hi: f64) -> Option<f64> {
    let (glo, ghi) = (g(lo).0, g(hi).0);
    if glo == 0.0 {
        Some(lo)
    } else if ghi == 0.0 {
        Some(hi)
    } else if (glo < 0.0) != (ghi < 0.0) {
        Some(newton_bisect(g, lo, hi))
    } else {
        None
    }
}

/// Roots of a function that is monotone between consecutive `breaks`,
/// including the two unbounded end segments.
fn piecewise_roots(g: impl Fn(f64) -> (f64, f64), breaks: &[f64], span: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if breaks.is_empty() {
        return out;
    }
    let first = breaks[0];
    let s0 = g(first).0;
    if s0 != 0.0 {
        if let Some(far) = expand_until(first, -1.0, span, |y| (g(y).0 < 0.0) != (s0 < 0.0)) {
            if let Some(r) = monotone_root(&g, far, first) {
                out.push(r);
            }
        }
    }
    for w in breaks.windows(2) {
        if let Some(r) = monotone_root(&g, w[0], w[1]) {
            out.push(r);
        }
    }
    let last = *breaks.last().unwrap();
    let s1 = g(last).0;
    if s1 != 0.0 {
        if let Some(far) = expand_until(last, 1.0, span, |y| (g(y).0 < 0.0) != (s1 < 0.0)) {
            if let Some(r) = monotone_root(&g, last, far) {
                out.push(r);
            }
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
    out
}

impl<'a> PotentialContext<'a> {
    pub fn new(problem: &'a OscillatorProblem, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidDelta(delta));
        }
        let window = state_bracket(problem);
        // generous window for the critical points of f
        let w = window.1 - window.0;
        let (lo, hi) = (window.0 - 2.0 * w, window.1 + 2.0 * w);
        let f = &problem.f;
        let mut f_crit: Vec<f64> = sign_changes(|y| f.d1(y), lo, hi, 8192)
            .into_iter()
            .map(|(a, b)| {
                if a == b {
                    a
                } else {
                    newton_bisect(
                        |y| {
                            let j = f.jet(y);
                            (j[1], j[2])
                        },
                        a,
                        b,
                    )
                }
            })
            .collect();
        f_crit.sort_by(|a, b| a.total_cmp(b));
        f_crit.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        Ok(PotentialContext {
            problem,
            delta,
            window,
            f_crit,
        })
    }

    fn span(&self) -> f64 {
        (self.window.1 - self.window.0).max(1.0)
    }

    fn scale(&self, t: f64) -> f64 {
        1.0 + self.problem.m.value(t).abs() + self.problem.f.magnitude()
    }

    /// `V(t, y)`.
    pub fn potential(&self, t: f64, y: f64) -> f64 {
        self.problem.f.antiderivative(y) - self.problem.m.value(t) * y
    }

    /// `dV/dy = f(y) - m(t)`.
    pub fn force(&self, t: f64, y: f64) -> f64 {
        self.problem.f.value(y) - self.problem.m.value(t)
    }

    /// Critical points of `V(t, .)`, i.e. roots of `f(y) = m(t)`, ascending.
    pub fn critical_points(&self, t: f64) -> Vec<f64> {
        let c = self.problem.m.value(t);
        let f = &self.problem.f;
        let g = |y: f64| {
            let j = f.jet(y);
            (j[0] - c, j[1])
        };
        if self.f_crit.is_empty() {
            return piecewise_roots(g, &[0.5 * (self.window.0 + self.window.1)], self.span());
        }
        piecewise_roots(g, &self.f_crit, self.span())
    }

    /// Every root of `V(t, y) = level`, ascending.
    pub fn level_roots(&self, t: f64, level: f64) -> Vec<f64> {
        let crit = self.critical_points(t);
        let c = self.problem.m.value(t);
        let g = |y: f64| (self.potential(t, y) - level, self.problem.f.value(y) - c);
        let breaks = if crit.is_empty() { vec![0.0] } else { crit };
        piecewise_roots(g, &breaks, self.span())
    }

    /// Base level `H0(t)`: the potential on the home branch.
    pub fn base_level(&self, geom: &Geometry, t: f64) -> Result<f64> {
        let u = geom.home_branch(t).value(self.problem, t)?;
        Ok(self.potential(t, u))
    }

    /// Outermost roots of `V(t, .) = level`.
    pub fn turning_points(&self, t: f64, level: f64) -> Result<TurningPoints> {
        let roots = self.level_roots(t, level);
        if roots.len() < 2 {
            return Err(Error::NoTurningPoints { t, level });
        }
        Ok(TurningPoints {
            y_left: roots[0],
            y_right: *roots.last().unwrap(),
            level,
            t,
        })
    }

    /// Closed orbit of the frozen-time system at `level` in the chosen well.
    pub fn well_orbit(&self, t: f64, level: f64, well: Well) -> Result<TurningPoints> {
        let crit = self.critical_points(t);
        let minima: Vec<f64> = crit
            .iter()
            .copied()
            .filter(|&y| self.problem.f.d1(y) > 0.0)
            .collect();
        let roots = self.level_roots(t, level);
        let none = Error::NoTurningPoints { t, level };
        let (yl, yr) = match well {
            Well::Outer => {
                if roots.len() < 2 {
                    return Err(none);
                }
                (roots[0], *roots.last().unwrap())
            }
            Well::Left | Well::Right => {
                let c = if well == Well::Left {
                    minima.first()
                } else {
                    minima.last()
                };
                let c = *c.ok_or(none)?;
                if self.potential(t, c) >= level {
                    return Err(Error::NoTurningPoints { t, level });
                }
                let yl = roots.iter().rev().find(|&&r| r < c).copied();
                let yr = roots.iter().find(|&&r| r > c).copied();
                match (yl, yr) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::NoTurningPoints { t, level }),
                }
            }
        };
        let tol = SEPARATRIX_TOL * self.scale(t).max(level.abs());
        for &c in &crit {
            let on_orbit = c > yl - 1e-9 && c < yr + 1e-9;
            if on_orbit && (self.potential(t, c) - level).abs() <= tol {
                return Err(Error::SeparatrixLevel {
                    t,
                    level,
                    barrier: c,
                });
            }
            // an interior barrier above the level splits the orbit
            if c > yl && c < yr && self.potential(t, c) > level {
                return Err(Error::NoTurningPoints { t, level });
            }
        }
        Ok(TurningPoints {
            y_left: yl,
            y_right: yr,
            level,
            t,
        })
    }

    /// Action `I` and frequency `omega` of the frozen-time orbit.
    ///
    /// `I = (1/pi) int sqrt(2 (L - V)) dy` and the fast-time period
    /// `T = 2 a(t) int dy / sqrt(2 (L - V))` over `[y_L, y_R]`. The integrals
    /// are split at interior critical points; the end segments use
    /// `y = y_L + s^2` and `y = y_R - s^2`, which removes the inverse square
    /// root.
    pub fn action_frequency(&self, t: f64, level: f64, well: Well) -> Result<ActionFrequency> {
        let orbit = self.well_orbit(t, level, well)?;
        let (yl, yr) = (orbit.y_left, orbit.y_right);
        let mut cuts: Vec<f64> = self
            .critical_points(t)
            .into_iter()
            .filter(|&c| c > yl && c < yr)
            .collect();
        if cuts.is_empty() {
            cuts.push(0.5 * (yl + yr));
        }
        let gap = |y: f64| (2.0 * (level - self.potential(t, y))).max(0.0);
        let rule = gl8();
        let panels = 8;
        let mut action = 0.0;
        let mut half_period = 0.0;
        // left end: y = yl + s^2, dy = 2 s ds
        let s_max = (cuts[0] - yl).sqrt();
        action +=
            rule.integrate_composite(0.0, s_max, panels, |s| 2.0 * s * gap(yl + s * s).sqrt());
        half_period += rule.integrate_composite(0.0, s_max, panels, |s| {
            let g = gap(yl + s * s);
            if g > 0.0 {
                2.0 * s / g.sqrt()
            } else {
                0.0
            }
        });
        for w in cuts.windows(2) {
            action += rule.integrate_composite(w[0], w[1], panels, |y| gap(y).sqrt());
            half_period += rule.integrate_composite(w[0], w[1], panels, |y| 1.0 / gap(y).sqrt());
        }
        let last = *cuts.last().unwrap();
        let s_max = (yr - last).sqrt();
        action +=
            rule.integrate_composite(0.0, s_max, panels, |s| 2.0 * s * gap(yr - s * s).sqrt());
        half_period += rule.integrate_composite(0.0, s_max, panels, |s| {
            let g = gap(yr - s * s);
            if g > 0.0 {
                2.0 * s / g.sqrt()
            } else {
                0.0
            }
        });
        let a = self.problem.a.value(t);
        let period = 2.0 * a * half_period;
        Ok(ActionFrequency {
            action: action / std::f64::consts::PI,
            omega: 2.0 * std::f64::consts::PI / period,
            period,
            orbit,
        })
    }

    /// `I(t, y) = int_{u}^{y} (f(s) - m(t)) ds` by Gauss-Legendre.
    pub fn well_integral(&self, t: f64, u: f64, y: f64) -> f64 {
        gl16().integrate_composite(u, y, 4, |s| self.force(t, s))
    }

    /// `chi(t, y) = 2 fbar2 - 4 I / (y - u2)^2` around the middle branch.
    pub fn chi(&self, geom: &Geometry, t: f64, y: f64) -> Result<f64> {
        let mani = geom
            .manifold()
            .ok_or_else(|| Error::InvalidArgument("chi needs a folded manifold".into()))?;
        let u2 = mani.branch(self.problem, BranchId::U2, t)?.u;
        Ok(self.chi_at(t, u2, y))
    }

    pub(crate) fn chi_at(&self, t: f64, u2: f64, y: f64) -> f64 {
        let d = y - u2;
        if d.abs() < CHI_PUNCTURE {
            return 0.0;
        }
        let fbar = self.force(t, y) / d;
        2.0 * fbar - 4.0 * self.well_integral(t, u2, y) / (d * d)
    }

    /// Grid check of `chi(t, y) > -4 Delta / (y - u2)^2` on the middle chart.
    ///
    /// `y` ranges over the span between the outer branches with a puncture
    /// at `u2`. Fold-free geometries have no middle chart and pass
    /// trivially.
    pub fn check_a4(
        &self,
        geom: &Geometry,
        charts: &ChartPartition,
        n_t: usize,
        n_y: usize,
    ) -> Result<ValidationReport> {
        let mut report = ValidationReport::new();
        let (Some(mani), Some(k2)) = (geom.manifold(), charts.get(ChartId::K2)) else {
            return Ok(report);
        };
        let p = self.problem;
        let mut failures = 0usize;
        let mut worst: Option<(f64, f64, f64)> = None;
        for t in k2.grid(n_t) {
            let u1 = mani.branch(p, BranchId::U1, t)?.u;
            let u2 = mani.branch(p, BranchId::U2, t)?.u;
            let u3 = mani.branch(p, BranchId::U3, t)?.u;
            for j in 0..n_y {
                let y = u3 + (u1 - u3) * j as f64 / (n_y - 1) as f64;
                let d = y - u2;
                if d.abs() < CHI_PUNCTURE {
                    continue;
                }
                let chi = self.chi_at(t, u2, y);
                // compare d^2 chi with -4 Delta to avoid the 1/d^2 blow-up
                let margin = d * d * chi + 4.0 * self.delta;
                if margin <= 0.0 {
                    failures += 1;
                    if worst.is_none_or(|w| margin < w.2) {
                        worst = Some((t, y, margin));
                    }
                    if failures <= 16 {
                        report.push(
                            "A4",
                            Some(Location::Point { t, y }),
                            format!(
                                "chi = {chi} <= -4 Delta / (y - u2)^2 = {}",
                                -4.0 * self.delta / (d * d)
                            ),
                        );
                    }
                }
            }
        }
        if let Some((t, y, m)) = worst {
            report.push(
                "A4",
                Some(Location::Point { t, y }),
                format!("{failures} grid points fail; worst (y - u2)^2 chi + 4 Delta = {m}"),
            );
        }
        Ok(report)
    }
}
