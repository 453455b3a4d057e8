//! Trajectories of the fast–slow system in fast time `tau`:
//!
//! ```text
//! dy/dtau = w / a,   dw/dtau = (m - f(y)) / a - eps (a'/a) w,   dt/dtau = eps.
//! ```

use serde::{Deserialize, Serialize};

use crate::energy::PotentialContext;
use crate::error::{Error, Result};
use crate::manifold::{BranchId, Geometry, ReferenceBranch};
use crate::ode::{self, DenseStep, StepControl};
use crate::problem::OscillatorProblem;

/// Largest admissible `eps`.
pub const MAX_EPSILON: f64 = 0.25;
/// Zeros of `y - u` are located to this residual.
pub const CROSSING_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in fast time.
    pub max_step_fast: f64,
    pub dense_output: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step_fast: 0.1,
            dense_output: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} not in (0, 1e-2]"
                )));
            }
        }
        if !(self.max_step_fast > 0.0 && self.max_step_fast.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "max_step_fast = {} must be positive",
                self.max_step_fast
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub y: f64,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub t_star: f64,
    pub branch: BranchId,
    pub direction: Direction,
    /// `|y(t*) - u(t*)|`.
    pub residual: f64,
}

/// Zeros of `y - u` on a time window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossingScan {
    pub events: Vec<CrossingEvent>,
    /// Near-zeros without a sign change.
    pub tangential: usize,
}

/// Numerical solution with per-step interpolants.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub epsilon: f64,
    /// Accepted step ends.
    pub samples: Vec<Sample>,
    pub events: Vec<CrossingEvent>,
    t0: f64,
    /// Interpolants in the shifted fast time `sigma = (t - t0) / eps`.
    dense: Vec<DenseStep<2>>,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().unwrap().t
    }

    pub fn has_dense(&self) -> bool {
        !self.dense.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    fn sigma(&self, t: f64) -> f64 {
        (t - self.t0) / self.epsilon
    }

    fn step_index(&self, sigma: f64) -> usize {
        let k = self.dense.partition_point(|d| d.x1() < sigma);
        k.min(self.dense.len() - 1)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !self.has_dense() {
            return Err(Error::DenseOutputRequired);
        }
        let tol = 1e-12 * (1.0 + t.abs());
        if t < self.t_start() - tol || t > self.t_end() + tol {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside trajectory span [{}, {}]",
                self.t_start(),
                self.t_end()
            )));
        }
        Ok(())
    }

    /// `(y, w)` at slow time `t`.
    pub fn state_at(&self, t: f64) -> Result<[f64; 2]> {
        self.check_time(t)?;
        let s = self.sigma(t);
        Ok(self.dense[self.step_index(s)].state(s))
    }

    /// `(y, w)` and their slow-time derivatives at `t`.
    pub fn state_and_rate_at(&self, t: f64) -> Result<([f64; 2], [f64; 2])> {
        self.check_time(t)?;
        let s = self.sigma(t);
        let (y, dy) = self.dense[self.step_index(s)].state_and_rate(s);
        Ok((y, [dy[0] / self.epsilon, dy[1] / self.epsilon]))
    }

    /// Step boundaries in slow time.
    pub fn step_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// Integrate from `(y0, w0)` at `span.0` to `span.1`.
pub fn integrate(
    p: &OscillatorProblem,
    epsilon: f64,
    y0: f64,
    w0: f64,
    span: (f64, f64),
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} not in (0, {MAX_EPSILON}]"
        )));
    }
    opts.validate()?;
    let (t0, t1) = span;
    if !(t0 < t1) || !p.contains(t0) || !p.contains(t1) {
        return Err(Error::InvalidArgument(format!(
            "span [{t0}, {t1}] not inside [{}, {}]",
            p.t_begin, p.t_end
        )));
    }
    if !y0.is_finite() || !w0.is_finite() {
        return Err(Error::InvalidArgument("non-finite initial state".into()));
    }
    let sys = |sigma: f64, s: &[f64; 2]| {
        let t = t0 + epsilon * sigma;
        let a = p.a.jet(t);
        let m = p.m.value(t);
        let f = p.f.value(s[0]);
        [s[1] / a[0], (m - f) / a[0] - epsilon * a[1] / a[0] * s[1]]
    };
    let ctl = StepControl {
        rtol: opts.rel_tol,
        atol: opts.abs_tol,
        h_max: opts.max_step_fast,
        ..StepControl::default()
    };
    let sigma_end = (t1 - t0) / epsilon;
    let sol = ode::solve(&sys, 0.0, [y0, w0], sigma_end, &ctl).map_err(|e| match e {
        Error::StiffnessFailure { t, step } => Error::StiffnessFailure {
            t: t0 + epsilon * t,
            step,
        },
        Error::Divergence { t } => Error::Divergence {
            t: t0 + epsilon * t,
        },
        other => other,
    })?;
    let mut samples: Vec<Sample> = sol
        .xs
        .iter()
        .zip(&sol.ys)
        .map(|(&s, y)| Sample {
            t: t0 + epsilon * s,
            y: y[0],
            w: y[1],
        })
        .collect();
    // exact end point
    samples.last_mut().unwrap().t = t1;
    Ok(Trajectory {
        epsilon,
        samples,
        events: Vec::new(),
        t0,
        dense: if opts.dense_output {
            sol.dense
        } else {
            Vec::new()
        },
    })
}

/// Standard start: `w0 = 0` and `y0` the right turning point of the level
/// `H0(t0) + Delta`.
pub fn standard_initial_condition(
    ctx: &PotentialContext,
    geom: &Geometry,
    t0: f64,
) -> Result<(f64, f64)> {
    let level = ctx.base_level(geom, t0)? + ctx.delta;
    let tp = ctx.turning_points(t0, level)?;
    Ok((tp.y_right, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub h: f64,
    /// `dH/dt + (a'/a) w^2 + m' y`; zero along exact solutions.
    pub residual: f64,
}

/// `H = w^2/2 + V` and the energy-identity residual on `n` uniform times.
///
/// `dH/dt = w w_t + (f(y) - m) y_t - m' y` with `y_t`, `w_t` taken from the
/// interpolant.
pub fn energy_along(
    traj: &Trajectory,
    p: &OscillatorProblem,
    n: usize,
) -> Result<Vec<EnergySample>> {
    if !traj.has_dense() {
        return Err(Error::DenseOutputRequired);
    }
    let n = n.max(2);
    let (ta, tb) = (traj.t_start(), traj.t_end());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = if k + 1 == n {
            tb
        } else {
            ta + (tb - ta) * k as f64 / (n - 1) as f64
        };
        let ([y, w], [yt, wt]) = traj.state_and_rate_at(t)?;
        let a = p.a.jet(t);
        let m = p.m.jet(t);
        let f = p.f.value(y);
        let h = 0.5 * w * w + p.f.antiderivative(y) - m[0] * y;
        let dh = w * wt + (f - m[0]) * yt - m[1] * y;
        out.push(EnergySample {
            t,
            h,
            residual: dh + a[1] / a[0] * w * w + m[1] * y,
        });
    }
    Ok(out)
}

/// Energy at the step ends, without interpolation.
pub fn energy_at_steps(traj: &Trajectory, p: &OscillatorProblem) -> Vec<(f64, f64)> {
    traj.samples
        .iter()
        .map(|s| {
            (
                s.t,
                0.5 * s.w * s.w + p.f.antiderivative(s.y) - p.m.value(s.t) * s.y,
            )
        })
        .collect()
}

/// Sign changes of `y(t) - u(t)` on `window`, refined by bisection on the
/// interpolant.
pub fn detect_crossings(
    traj: &Trajectory,
    p: &OscillatorProblem,
    branch: &ReferenceBranch,
    window: (f64, f64),
) -> Result<CrossingScan> {
    if !traj.has_dense() {
        return Err(Error::DenseOutputRequired);
    }
    let lo = window.0.max(traj.t_start());
    let hi = window.1.min(traj.t_end());
    if !(branch.in_domain(lo) && branch.in_domain(hi)) {
        return Err(Error::BranchDomain {
            branch: branch.id,
            t: if branch.in_domain(lo) { hi } else { lo },
            lo: branch.domain.0,
            hi: branch.domain.1,
        });
    }
    let mut scan = CrossingScan::default();
    if lo >= hi {
        return Ok(scan);
    }
    let g = |t: f64| -> Result<f64> { Ok(traj.state_at(t)?[0] - branch.value(p, t)?) };
    let scale = 1.0 + branch.value(p, lo)?.abs();
    let tol = CROSSING_TOL * scale;

    // sample grid: step ends plus four interior points per step
    let mut grid = vec![lo];
    for w in traj.samples.windows(2) {
        let (a, b) = (w[0].t, w[1].t);
        if b <= lo || a >= hi {
            continue;
        }
        for k in 1..=4 {
            let t = a + (b - a) * k as f64 / 5.0;
            if t > lo && t < hi {
                grid.push(t);
            }
        }
        if b > lo && b < hi {
            grid.push(b);
        }
    }
    grid.push(hi);
    let values: Vec<f64> = grid.iter().map(|&t| g(t)).collect::<Result<_>>()?;

    for k in 0..grid.len() - 1 {
        let (ta, tb) = (grid[k], grid[k + 1]);
        let (ga, gb) = (values[k], values[k + 1]);
        if ga == 0.0 {
            continue;
        }
        if gb == 0.0 || (ga < 0.0) != (gb < 0.0) {
            let (mut a, mut b, mut fa) = (ta, tb, ga);
            let mut t_star = if gb == 0.0 { tb } else { 0.5 * (a + b) };
            let mut gs = if gb == 0.0 { 0.0 } else { g(t_star)? };
            let mut iters = 0;
            while gs.abs() > tol && iters < 200 {
                if (gs < 0.0) == (fa < 0.0) {
                    a = t_star;
                    fa = gs;
                } else {
                    b = t_star;
                }
                // secant guess safeguarded by the bracket
                let gb_now = g(b)?;
                let sec = a - fa * (b - a) / (gb_now - fa);
                t_star = if sec > a && sec < b && iters % 3 != 2 {
                    sec
                } else {
                    0.5 * (a + b)
                };
                if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                    break;
                }
                gs = g(t_star)?;
                iters += 1;
            }
            scan.events.push(CrossingEvent {
                t_star,
                branch: branch.id,
                direction: if ga < 0.0 {
                    Direction::Up
                } else {
                    Direction::Down
                },
                residual: gs.abs(),
            });
        } else if k > 0 {
            // grazing: a local minimum of |g| that stays on one side
            let gp = values[k - 1];
            if ga.abs() < tol
                && gp.abs() > ga.abs()
                && gb.abs() > ga.abs()
                && (gp < 0.0) == (ga < 0.0)
            {
                scan.tangential += 1;
            }
        }
    }
    Ok(scan)
}

/// Whether consecutive events alternate direction.
pub fn alternates(events: &[CrossingEvent]) -> bool {
    events.windows(2).all(|w| w[0].direction != w[1].direction)
}
