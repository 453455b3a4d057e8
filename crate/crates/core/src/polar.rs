//! Polar coordinates around a branch, the angular rate and the chart
//! constants bounding it from below.
//!
//! With `v = eps a^2 y'` the substitution `y = u + r cos(gamma)`,
//! `v = -r sin(gamma)` gives
//!
//! ```text
//! gamma' = (1/eps) [1/a^2 + cos^2(gamma) (fbar - 1/a^2) + eps u' sin(gamma) / r],
//! fbar   = (f(y) - m(t)) / (y - u(t)).
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::PotentialContext;
use crate::error::{Error, Result};
use crate::manifold::{BranchId, Chart, ChartId, ChartPartition, Geometry, ReferenceBranch};
use crate::problem::OscillatorProblem;

/// Safety factor applied to every grid minimum.
pub const DEFLATION: f64 = 0.9;
/// Radius below which the angular rate is not evaluated.
pub const R_FLOOR: f64 = 1e-12;
const FBAR_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    /// Unwrapped angle.
    pub gamma: f64,
}

/// Polar state of `(y, y')` around `branch` at time `t`.
pub fn to_polar(
    p: &OscillatorProblem,
    branch: &ReferenceBranch,
    epsilon: f64,
    t: f64,
    y: f64,
    y_prime: f64,
) -> Result<PolarState> {
    let a = p.a.value(t);
    polar_from_v(p, branch, t, y, epsilon * a * a * y_prime)
}

/// Same as [`to_polar`] with the fast-time velocity `w = v / a`.
pub fn to_polar_w(
    p: &OscillatorProblem,
    branch: &ReferenceBranch,
    t: f64,
    y: f64,
    w: f64,
) -> Result<PolarState> {
    polar_from_v(p, branch, t, y, p.a.value(t) * w)
}

fn polar_from_v(
    p: &OscillatorProblem,
    branch: &ReferenceBranch,
    t: f64,
    y: f64,
    v: f64,
) -> Result<PolarState> {
    let d = y - branch.value(p, t)?;
    let r = d.hypot(v);
    if r == 0.0 {
        return Err(Error::PolarSingularity);
    }
    Ok(PolarState {
        r,
        gamma: (-v).atan2(d),
    })
}

/// `(y, v)` from a polar state.
pub fn from_polar(
    p: &OscillatorProblem,
    branch: &ReferenceBranch,
    t: f64,
    s: PolarState,
) -> Result<(f64, f64)> {
    let u = branch.value(p, t)?;
    let (sin, cos) = s.gamma.sin_cos();
    Ok((u + s.r * cos, -s.r * sin))
}

/// Lift a sequence of wrapped angles to a continuous one.
pub fn unwrap_angles(angles: &mut [f64]) {
    use std::f64::consts::{PI, TAU};
    for k in 1..angles.len() {
        let mut d = angles[k] - angles[k - 1];
        d -= TAU * ((d + PI) / TAU).floor();
        angles[k] = angles[k - 1] + d;
    }
}

fn fbar_at(p: &OscillatorProblem, t: f64, u: f64, y: f64) -> f64 {
    let d = y - u;
    if d.abs() < FBAR_LIMIT {
        p.f.d1(u)
    } else {
        (p.f.value(y) - p.m.value(t)) / d
    }
}

/// Divided difference `(f(y) - m(t)) / (y - u(t))`, equal to `f'(u)` on the
/// branch.
pub fn fbar(p: &OscillatorProblem, branch: &ReferenceBranch, t: f64, y: f64) -> Result<f64> {
    Ok(fbar_at(p, t, branch.value(p, t)?, y))
}

/// `gamma'` in slow time.
pub fn gamma_rate(
    p: &OscillatorProblem,
    branch: &ReferenceBranch,
    epsilon: f64,
    t: f64,
    s: PolarState,
) -> Result<f64> {
    if !(s.r >= R_FLOOR) {
        return Err(Error::PolarSingularity);
    }
    let bp = branch.eval(p, t)?;
    let du = bp.du_or_err(t)?;
    let a = p.a.value(t);
    let inv_a2 = 1.0 / (a * a);
    let (sin, cos) = s.gamma.sin_cos();
    let y = bp.u + s.r * cos;
    let fb = fbar_at(p, t, bp.u, y);
    Ok((inv_a2 + cos * cos * (fb - inv_a2) + epsilon * du * sin / s.r) / epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantGrids {
    pub n_t: usize,
    pub n_y: usize,
    pub n_gamma: usize,
}

impl Default for ConstantGrids {
    fn default() -> Self {
        ConstantGrids {
            n_t: 64,
            n_y: 256,
            n_gamma: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: f64,
    pub y: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartConstants {
    pub chart_id: ChartId,
    pub branch: BranchId,
    pub epsilon: f64,
    pub delta: f64,
    pub r_min: f64,
    pub eta: f64,
    /// Half-width of the neighbourhood of `u2` handled by `eta` (middle chart).
    pub delta1: Option<f64>,
    /// Reach of the middle estimate past the outer branches (middle chart).
    pub delta2: Option<f64>,
    /// Raw grid minima `(c1, c2, c3)` of the middle chart.
    pub parts: Option<[f64; 3]>,
    /// Grid minimum before deflation.
    pub c_raw: f64,
    /// Reported constant, `DEFLATION * c_raw`.
    pub c: f64,
    pub argmin: GridPoint,
    pub grid_resolution: (usize, usize, usize),
}

/// Per-time data shared by every estimate.
#[derive(Clone, Copy, Debug)]
struct Slice {
    t: f64,
    inv_a2: f64,
    a: f64,
    u: f64,
    du: f64,
    level: f64,
    y_l: f64,
    y_r: f64,
}

fn slices(
    ctx: &PotentialContext,
    geom: &Geometry,
    chart: &Chart,
    n_t: usize,
) -> Result<Vec<Slice>> {
    let p = ctx.problem;
    chart
        .grid(n_t)
        .into_par_iter()
        .map(|t| {
            let bp = chart.branch.eval(p, t)?;
            let du = bp.du_or_err(t)?;
            let a = p.a.value(t);
            let level = ctx.base_level(geom, t)? + ctx.delta;
            let tp = ctx.turning_points(t, level)?;
            Ok(Slice {
                t,
                inv_a2: 1.0 / (a * a),
                a,
                u: bp.u,
                du,
                level,
                y_l: tp.y_left,
                y_r: tp.y_right,
            })
        })
        .collect()
}

/// Minimum with a deterministic tie-break on the grid index.
#[derive(Clone, Copy, Debug)]
struct Best {
    value: f64,
    key: (usize, usize, usize),
    at: GridPoint,
}

impl Best {
    fn none() -> Self {
        Best {
            value: f64::INFINITY,
            key: (usize::MAX, 0, 0),
            at: GridPoint {
                t: f64::NAN,
                y: None,
                gamma: None,
            },
        }
    }

    fn pick(self, other: Best) -> Best {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Less => self,
            std::cmp::Ordering::Greater => other,
            std::cmp::Ordering::Equal => {
                if self.key <= other.key {
                    self
                } else {
                    other
                }
            }
        }
    }
}

fn gamma_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|j| std::f64::consts::PI * j as f64 / n as f64)
        .collect()
}

/// Free-angle bound `sin^2/a^2 + fbar cos^2 - drift` over a `y` segment.
#[allow(clippy::too_many_arguments)]
fn free_angle_min(
    p: &OscillatorProblem,
    s: &Slice,
    i: usize,
    lo: f64,
    hi: f64,
    n_y: usize,
    gammas: &[f64],
    drift: f64,
) -> Best {
    let mut best = Best::none();
    if !(hi >= lo) {
        return best;
    }
    for j in 0..n_y {
        let y = if n_y == 1 {
            lo
        } else {
            lo + (hi - lo) * j as f64 / (n_y - 1) as f64
        };
        let fb = fbar_at(p, s.t, s.u, y);
        for (k, &g) in gammas.iter().enumerate() {
            let (sin, cos) = g.sin_cos();
            let v = s.inv_a2 * sin * sin + fb * cos * cos - drift;
            best = best.pick(Best {
                value: v,
                key: (i, j, k),
                at: GridPoint {
                    t: s.t,
                    y: Some(y),
                    gamma: Some(g),
                },
            });
        }
    }
    best
}

/// Squared cosine of the angle on the level `L`: `d^2 / (d^2 + 2 a^2 (L - V))`.
fn cos2_on_level(ctx: &PotentialContext, s: &Slice, y: f64) -> f64 {
    let d = y - s.u;
    let gap = (s.level - ctx.potential(s.t, y)).max(0.0);
    let den = d * d + 2.0 * s.a * s.a * gap;
    if den == 0.0 {
        1.0
    } else {
        d * d / den
    }
}

/// Constants for one chart. Fails with `EpsilonTooLarge` when the grid
/// minimum is not positive.
pub fn chart_constants(
    ctx: &PotentialContext,
    geom: &Geometry,
    chart: &Chart,
    epsilon: f64,
    grids: ConstantGrids,
) -> Result<ChartConstants> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let p = ctx.problem;
    let sl = slices(ctx, geom, chart, grids.n_t)?;
    let r_min = sl
        .iter()
        .map(|s| {
            let well = (2.0 * (s.level - ctx.potential(s.t, s.u))).max(0.0).sqrt() * s.a;
            (s.u - s.y_l).min(s.y_r - s.u).min(well)
        })
        .fold(f64::INFINITY, f64::min);
    let eta = 0.5 * sl.iter().map(|s| s.inv_a2).fold(f64::INFINITY, f64::min);
    let gammas = gamma_grid(grids.n_gamma);
    let n_y = grids.n_y.max(2);

    let (best, delta1, delta2, parts) = if chart.id == ChartId::K2 {
        let mani = geom
            .manifold()
            .ok_or_else(|| Error::InvalidArgument("middle chart without folds".into()))?;
        let outer: Vec<(f64, f64)> = sl
            .iter()
            .map(|s| {
                Ok((
                    mani.branch(p, BranchId::U3, s.t)?.u,
                    mani.branch(p, BranchId::U1, s.t)?.u,
                ))
            })
            .collect::<Result<_>>()?;

        // delta1: first radius around u2 where the eta estimate breaks
        let delta1 = sl
            .par_iter()
            .map(|s| {
                let mut reach = f64::INFINITY;
                for (end, sign) in [(s.y_r, 1.0), (s.y_l, -1.0)] {
                    let span = (end - s.u).abs();
                    for j in 1..=n_y {
                        let d = span * j as f64 / n_y as f64;
                        let y = s.u + sign * d;
                        let lhs =
                            (cos2_on_level(ctx, s, y) * (fbar_at(p, s.t, s.u, y) - s.inv_a2)).abs();
                        if lhs > s.inv_a2 - eta {
                            reach = reach.min(span * (j - 1) as f64 / n_y as f64);
                            break;
                        }
                    }
                    reach = reach.min(span);
                }
                reach
            })
            .reduce(|| f64::INFINITY, f64::min);

        let drift: Vec<f64> = sl.iter().map(|s| epsilon * s.du.abs() / r_min).collect();

        // bracket [ ] of the middle estimate, clipped at zero
        let bracket = |s: &Slice, y: f64| -> f64 {
            (cos2_on_level(ctx, s, y) * (1.0 - s.inv_a2.recip() * fbar_at(p, s.t, s.u, y))).max(0.0)
        };
        let in_middle = |d2: f64| -> bool {
            sl.iter().zip(&outer).all(|(s, &(u3, u1))| {
                let (lo, hi) = (u3 - d2, u1 + d2);
                (0..n_y).all(|j| {
                    let y = lo + (hi - lo) * j as f64 / (n_y - 1) as f64;
                    (y - s.u).abs() < delta1 || bracket(s, y) < 1.0
                })
            })
        };
        let mut delta2 = sl
            .iter()
            .zip(&outer)
            .map(|(s, &(u3, u1))| (u3 - s.y_l).min(s.y_r - u1))
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let mut halvings = 0;
        while !in_middle(delta2) && halvings < 60 {
            delta2 *= 0.5;
            halvings += 1;
        }

        let c1 = sl
            .iter()
            .enumerate()
            .map(|(i, s)| Best {
                value: eta - drift[i],
                key: (i, 0, 0),
                at: GridPoint {
                    t: s.t,
                    y: None,
                    gamma: None,
                },
            })
            .fold(Best::none(), Best::pick);
        let c2 = sl
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let (u3, u1) = outer[i];
                let mut best = Best::none();
                for (lo, hi) in [(u3 - delta2, s.u - delta1), (s.u + delta1, u1 + delta2)] {
                    if !(hi > lo) {
                        continue;
                    }
                    for j in 0..n_y {
                        let y = lo + (hi - lo) * j as f64 / (n_y - 1) as f64;
                        let v = s.inv_a2 - s.inv_a2 * bracket(s, y) - drift[i];
                        best = best.pick(Best {
                            value: v,
                            key: (i, j, 0),
                            at: GridPoint {
                                t: s.t,
                                y: Some(y),
                                gamma: None,
                            },
                        });
                    }
                }
                best
            })
            .reduce(Best::none, Best::pick);
        let c3 = sl
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let (u3, u1) = outer[i];
                let left = free_angle_min(p, s, i, s.y_l, u3 - delta2, n_y, &gammas, drift[i]);
                let right = free_angle_min(p, s, i, u1 + delta2, s.y_r, n_y, &gammas, drift[i]);
                left.pick(right)
            })
            .reduce(Best::none, Best::pick);
        let best = c1.pick(c2).pick(c3);
        (
            best,
            Some(delta1),
            Some(delta2),
            Some([c1.value, c2.value, c3.value]),
        )
    } else {
        let best = sl
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let drift = epsilon * s.du.abs() / r_min;
                free_angle_min(p, s, i, s.y_l, s.y_r, n_y, &gammas, drift)
            })
            .reduce(Best::none, Best::pick);
        (best, None, None, None)
    };

    if !(best.value > 0.0) {
        return Err(Error::EpsilonTooLarge {
            chart: chart.id,
            t: best.at.t,
            y: best.at.y.unwrap_or(f64::NAN),
            value: best.value,
        });
    }
    Ok(ChartConstants {
        chart_id: chart.id,
        branch: chart.branch.id,
        epsilon,
        delta: ctx.delta,
        r_min,
        eta,
        delta1,
        delta2,
        parts,
        c_raw: best.value,
        c: DEFLATION * best.value,
        argmin: best.at,
        grid_resolution: (grids.n_t, grids.n_y, grids.n_gamma),
    })
}

/// Constants for every chart of the partition.
pub fn compute_constants(
    ctx: &PotentialContext,
    geom: &Geometry,
    charts: &ChartPartition,
    epsilon: f64,
    grids: ConstantGrids,
) -> Result<Vec<ChartConstants>> {
    charts
        .charts
        .iter()
        .map(|c| chart_constants(ctx, geom, c, epsilon, grids))
        .collect()
}
