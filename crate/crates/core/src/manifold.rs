//! Critical manifold `f(y) = m(t)`: folds, branches `u1, u2, u3` and charts.
//!
//! Branch numbering follows the usual convention for an S-shaped manifold
//! `t = phi(y)`: `u1` is the upper piece (`y >= y_max`, defined up to
//! `t_max`), `u2` the middle piece between the folds and `u3` the lower
//! piece (`y <= y_min`, defined from `t_min`). In state order this gives
//! `u3 <= u2 <= u1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::problem::{Location, OscillatorProblem, ValidationReport};
use crate::roots::{expand_until, newton_bisect, sign_changes};

/// Tolerance on `|phi''|` below which a critical point counts as degenerate.
pub const NONDEGENERACY_TOL: f64 = 1e-8;
/// Below this `|f'(u)|` the implicit derivative of a branch is withheld.
pub const FOLD_DERIVATIVE_GUARD: f64 = 1e-6;
/// Default chart margin as a fraction of the interval length.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.05;

const ROOT_SCAN: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BranchId {
    U1,
    U2,
    U3,
    /// The only branch of a manifold without folds.
    Single,
}

impl BranchId {
    /// 1, 2 or 3; the fold-free branch is 0.
    pub fn index(self) -> u8 {
        match self {
            BranchId::U1 => 1,
            BranchId::U2 => 2,
            BranchId::U3 => 3,
            BranchId::Single => 0,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(BranchId::U1),
            2 => Ok(BranchId::U2),
            3 => Ok(BranchId::U3),
            0 => Ok(BranchId::Single),
            _ => Err(Error::InvalidArgument(format!(
                "branch index {i} not in 1..=3"
            ))),
        }
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchId::Single => write!(f, "u"),
            b => write!(f, "u{}", b.index()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChartId {
    /// Whole interval of a fold-free problem.
    K0,
    K1,
    K2,
    K3,
}

impl ChartId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "K0" => Ok(ChartId::K0),
            "K1" => Ok(ChartId::K1),
            "K2" => Ok(ChartId::K2),
            "K3" => Ok(ChartId::K3),
            _ => Err(Error::InvalidArgument(format!("unknown chart `{s}`"))),
        }
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChartId::K0 => "K0",
            ChartId::K1 => "K1",
            ChartId::K2 => "K2",
            ChartId::K3 => "K3",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    Minimum,
    Maximum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub y_at_fold: f64,
    pub t_at_fold: f64,
    pub kind: FoldKind,
    /// `phi''` at the fold, where `t = phi(y)` parametrises the manifold.
    pub second_derivative: f64,
}

/// Roots of `f(y) = m(t)` at one time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    /// Simple roots, ascending.
    pub roots: Vec<f64>,
    /// Double roots (tangencies), reported separately.
    pub tangent: Vec<f64>,
}

impl RootSet {
    pub fn has_tangent(&self) -> bool {
        !self.tangent.is_empty()
    }
}

fn residual_scale(p: &OscillatorProblem, t: f64) -> f64 {
    1.0 + p.m.value(t).abs() + p.f.magnitude()
}

/// Radius containing every real root of `f(y) = c` for `|c| <= shift`.
///
/// Cauchy's bound on the polynomial part, with the trig amplitudes folded
/// into the constant term. Without a non-constant polynomial part no bound
/// exists and a fixed window is used.
fn root_radius(f: &FunctionSpec, shift: f64) -> f64 {
    let poly = f.poly_coefficients();
    let lead = poly.iter().rposition(|&c| c != 0.0);
    let trig: f64 = f.trig_terms().iter().map(|t| t.amplitude.abs()).sum();
    match lead {
        Some(n) if n >= 1 => {
            let cn = poly[n].abs();
            let mut big = poly[..n].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            big += trig + shift;
            1.0 + big / cn
        }
        _ => 10.0,
    }
}

fn dedup_sorted(v: &mut Vec<f64>, tol: f64) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= tol * (1.0 + b.abs()));
}

/// Roots of `f - c` in `[lo, hi]`, with tangencies split off.
fn roots_of_shifted(f: &FunctionSpec, c: f64, lo: f64, hi: f64, n: usize, scale: f64) -> RootSet {
    let g = |y: f64| f.value(y) - c;
    let mut roots: Vec<f64> = sign_changes(g, lo, hi, n)
        .into_iter()
        .map(|(a, b)| {
            if a == b {
                a
            } else {
                newton_bisect(
                    |y| {
                        let j = f.jet(y);
                        (j[0] - c, j[1])
                    },
                    a,
                    b,
                )
            }
        })
        .collect();
    dedup_sorted(&mut roots, 1e-12);
    // tangencies sit at critical points of f
    let mut tangent = Vec::new();
    for yc in critical_points(f, lo, hi, n) {
        if g(yc).abs() <= 1e-10 * scale {
            tangent.push(yc);
        }
    }
    // a tangency that the scan also caught is not a simple root
    roots.retain(|r| {
        !tangent
            .iter()
            .any(|y| (r - y).abs() <= 1e-6 * (1.0 + y.abs()) && f.d1(*r).abs() < 1e-6 * scale)
    });
    RootSet { roots, tangent }
}

/// Zeros of `f'` in `[lo, hi]`, including touching zeros without sign change.
fn critical_points(f: &FunctionSpec, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let d1 = |y: f64| f.d1(y);
    let mut pts: Vec<f64> = sign_changes(d1, lo, hi, n)
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
    // f' touching zero: extrema of f' (zeros of f'') where f' vanishes
    let scale = 1.0 + f.magnitude();
    for (a, b) in sign_changes(|y| f.d2(y), lo, hi, n) {
        let yc = if a == b {
            a
        } else {
            // bisection on f'' only; its derivative is not available exactly
            crate::roots::bisect(|y| f.d2(y), a, b, 1e-15)
        };
        if f.d1(yc).abs() <= 1e-9 * scale {
            pts.push(yc);
        }
    }
    dedup_sorted(&mut pts, 1e-9);
    pts
}

/// State window for manifold searches.
///
/// Hull of the roots at `t_B` and `t_E`, widened by half its width (at
/// least one unit on each side).
pub fn state_bracket(p: &OscillatorProblem) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in [p.t_begin, p.t_end] {
        let c = p.m.value(t);
        let r = root_radius(&p.f, c.abs());
        let set = roots_of_shifted(&p.f, c, -r, r, 2 * ROOT_SCAN, residual_scale(p, t));
        for y in set.roots.iter().chain(&set.tangent) {
            lo = lo.min(*y);
            hi = hi.max(*y);
        }
    }
    if !lo.is_finite() {
        return (-10.0, 10.0);
    }
    let pad = (0.5 * (hi - lo)).max(1.0);
    (lo - pad, hi + pad)
}

/// All real roots of `f(y) = m(t)` in the state window, ascending.
pub fn branch_roots(p: &OscillatorProblem, t: f64) -> Result<RootSet> {
    if !p.contains(t) {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside [{}, {}]",
            p.t_begin, p.t_end
        )));
    }
    let (lo, hi) = state_bracket(p);
    Ok(roots_of_shifted(
        &p.f,
        p.m.value(t),
        lo,
        hi,
        ROOT_SCAN,
        residual_scale(p, t),
    ))
}

#[derive(Clone, Copy, Debug)]
struct FoldCandidate {
    y: f64,
    t: f64,
    phi2: f64,
}

fn fold_candidates(p: &OscillatorProblem, lo: f64, hi: f64) -> Result<Vec<FoldCandidate>> {
    let mut out = Vec::new();
    for yc in critical_points(&p.f, lo, hi, ROOT_SCAN) {
        let target = p.f.value(yc);
        if p.m.is_constant() {
            if (p.m.value(p.t_begin) - target).abs() <= 1e-12 * residual_scale(p, p.t_begin) {
                return Err(Error::AssumptionA1Violated(format!(
                    "m is constant and f has a critical point at y = {yc} on the manifold"
                )));
            }
            continue;
        }
        let g = |t: f64| p.m.value(t) - target;
        let mut ts: Vec<f64> = sign_changes(g, p.t_begin, p.t_end, 1024)
            .into_iter()
            .map(|(a, b)| {
                if a == b {
                    a
                } else {
                    newton_bisect(
                        |t| {
                            let j = p.m.jet(t);
                            (j[0] - target, j[1])
                        },
                        a,
                        b,
                    )
                }
            })
            .collect();
        dedup_sorted(&mut ts, 1e-12);
        for t in ts {
            let mp = p.m.d1(t);
            let phi2 = if mp == 0.0 { 0.0 } else { p.f.d2(yc) / mp };
            out.push(FoldCandidate { y: yc, t, phi2 });
        }
    }
    Ok(out)
}

/// The two folds `(minimum, maximum)` of `t = phi(y)`.
pub fn find_folds(p: &OscillatorProblem) -> Result<(Fold, Fold)> {
    let (lo, hi) = state_bracket(p);
    let cands = fold_candidates(p, lo, hi)?;
    if let Some(bad) = cands
        .iter()
        .find(|c| c.phi2.abs() <= NONDEGENERACY_TOL || !c.phi2.is_finite())
    {
        return Err(Error::AssumptionA1Violated(format!(
            "degenerate critical point of phi at y = {}, t = {} (phi'' = {})",
            bad.y, bad.t, bad.phi2
        )));
    }
    let mins: Vec<_> = cands.iter().filter(|c| c.phi2 > 0.0).collect();
    let maxs: Vec<_> = cands.iter().filter(|c| c.phi2 < 0.0).collect();
    if mins.len() != 1 || maxs.len() != 1 {
        return Err(Error::AssumptionA1Violated(format!(
            "expected one fold minimum and one fold maximum in [{}, {}], found {} and {}",
            p.t_begin,
            p.t_end,
            mins.len(),
            maxs.len()
        )));
    }
    let (lo_c, hi_c) = (mins[0], maxs[0]);
    if lo_c.y >= hi_c.y {
        return Err(Error::AssumptionA1Violated(format!(
            "y_min = {} is not below y_max = {}",
            lo_c.y, hi_c.y
        )));
    }
    let fold = |c: &FoldCandidate, kind| Fold {
        y_at_fold: c.y,
        t_at_fold: c.t,
        kind,
        second_derivative: c.phi2,
    };
    Ok((fold(lo_c, FoldKind::Minimum), fold(hi_c, FoldKind::Maximum)))
}

/// A branch evaluated at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    pub u: f64,
    /// `u'(t) = m'(t) / f'(u)`, withheld next to a fold.
    pub du: Option<f64>,
}

impl BranchPoint {
    pub fn du_or_err(&self, t: f64) -> Result<f64> {
        self.du.ok_or(Error::BranchDerivativeUnavailable { t })
    }
}

/// One single-valued piece of the critical manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBranch {
    pub id: BranchId,
    /// Fold values bounding the branch in state, if any.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Time interval on which the branch exists.
    pub domain: (f64, f64),
    /// Search window for the open sides.
    window: (f64, f64),
}

impl ReferenceBranch {
    fn domain_tol(&self) -> f64 {
        1e-12 * (1.0 + self.domain.0.abs().max(self.domain.1.abs()))
    }

    pub fn in_domain(&self, t: f64) -> bool {
        let tol = self.domain_tol();
        t >= self.domain.0 - tol && t <= self.domain.1 + tol
    }

    pub fn value(&self, p: &OscillatorProblem, t: f64) -> Result<f64> {
        Ok(self.eval(p, t)?.u)
    }

    /// `u(t)` and `u'(t)`.
    pub fn eval(&self, p: &OscillatorProblem, t: f64) -> Result<BranchPoint> {
        if !self.in_domain(t) {
            return Err(Error::BranchDomain {
                branch: self.id,
                t,
                lo: self.domain.0,
                hi: self.domain.1,
            });
        }
        let c = p.m.value(t);
        let g = |y: f64| p.f.value(y) - c;
        let mut lo = self.lower.unwrap_or(self.window.0);
        let mut hi = self.upper.unwrap_or(self.window.1);
        let (mut glo, mut ghi) = (g(lo), g(hi));
        if self.lower.is_none() && glo * ghi > 0.0 {
            let s = ghi.signum();
            if let Some(x) = expand_until(lo, -1.0, hi - lo, |y| g(y).signum() != s) {
                lo = x;
                glo = g(lo);
            }
        }
        if self.upper.is_none() && glo * ghi > 0.0 {
            let s = glo.signum();
            if let Some(x) = expand_until(hi, 1.0, hi - lo, |y| g(y).signum() != s) {
                hi = x;
                ghi = g(hi);
            }
        }
        let u = if glo == 0.0 {
            lo
        } else if ghi == 0.0 {
            hi
        } else if glo * ghi < 0.0 {
            newton_bisect(
                |y| {
                    let j = p.f.jet(y);
                    (j[0] - c, j[1])
                },
                lo,
                hi,
            )
        } else {
            // at a fold time to rounding: the root sits on the fold end
            match (self.lower, self.upper) {
                (Some(l), _) if glo.abs() <= ghi.abs() => l,
                (_, Some(u)) => u,
                (Some(l), None) => l,
                (None, None) => {
                    return Err(Error::BranchDomain {
                        branch: self.id,
                        t,
                        lo: self.domain.0,
                        hi: self.domain.1,
                    })
                }
            }
        };
        let fp = p.f.d1(u);
        let du = if fp.abs() < FOLD_DERIVATIVE_GUARD {
            None
        } else {
            Some(p.m.d1(t) / fp)
        };
        Ok(BranchPoint { u, du })
    }
}

/// Folds, fold times and the three branches of an S-shaped manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalManifold {
    pub fold_min: Fold,
    pub fold_max: Fold,
    pub t_min: f64,
    pub t_max: f64,
    pub t_begin: f64,
    pub t_end: f64,
    pub state_window: (f64, f64),
}

impl CriticalManifold {
    pub fn new(p: &OscillatorProblem) -> Result<Self> {
        let (fold_min, fold_max) = find_folds(p)?;
        Ok(CriticalManifold {
            fold_min,
            fold_max,
            t_min: fold_min.t_at_fold,
            t_max: fold_max.t_at_fold,
            t_begin: p.t_begin,
            t_end: p.t_end,
            state_window: state_bracket(p),
        })
    }

    pub fn y_min(&self) -> f64 {
        self.fold_min.y_at_fold
    }

    pub fn y_max(&self) -> f64 {
        self.fold_max.y_at_fold
    }

    pub fn branch_domain(&self, i: BranchId) -> Result<(f64, f64)> {
        match i {
            BranchId::U1 => Ok((self.t_begin, self.t_max)),
            BranchId::U2 => Ok((self.t_min, self.t_max)),
            BranchId::U3 => Ok((self.t_min, self.t_end)),
            BranchId::Single => Err(Error::InvalidArgument(
                "a folded manifold has no single branch".into(),
            )),
        }
    }

    pub fn reference(&self, i: BranchId) -> Result<ReferenceBranch> {
        let domain = self.branch_domain(i)?;
        let (lower, upper) = match i {
            BranchId::U1 => (Some(self.y_max()), None),
            BranchId::U2 => (Some(self.y_min()), Some(self.y_max())),
            _ => (None, Some(self.y_min())),
        };
        Ok(ReferenceBranch {
            id: i,
            lower,
            upper,
            domain,
            window: self.state_window,
        })
    }

    /// `u_i(t)` with its implicit derivative.
    pub fn branch(&self, p: &OscillatorProblem, i: BranchId, t: f64) -> Result<BranchPoint> {
        self.reference(i)?.eval(p, t)
    }

    /// The branch that carries the base energy level at `t`.
    pub fn home_branch(&self, t: f64) -> BranchId {
        if t < self.t_min {
            BranchId::U1
        } else if t <= self.t_max {
            BranchId::U2
        } else {
            BranchId::U3
        }
    }

    /// Chart partition at distance `margin_fraction * (t_E - t_B)` from the folds.
    pub fn build_charts(&self, margin_fraction: f64) -> Result<ChartPartition> {
        if !(margin_fraction > 0.0 && margin_fraction < 0.25) {
            return Err(Error::InvalidArgument(format!(
                "margin fraction {margin_fraction} not in (0, 0.25)"
            )));
        }
        let margin = margin_fraction * (self.t_end - self.t_begin);
        let specs = [
            (ChartId::K1, BranchId::U1, self.t_begin, self.t_min - margin),
            (
                ChartId::K2,
                BranchId::U2,
                self.t_min + margin,
                self.t_max - margin,
            ),
            (ChartId::K3, BranchId::U3, self.t_max + margin, self.t_end),
        ];
        let mut charts = Vec::with_capacity(3);
        for (id, b, t0, t1) in specs {
            let t0 = t0.max(self.t_begin);
            let t1 = t1.min(self.t_end);
            if t0 >= t1 {
                return Err(Error::ChartMarginTooLarge(id));
            }
            charts.push(Chart {
                id,
                t0,
                t1,
                branch: self.reference(b)?,
            });
        }
        Ok(ChartPartition { charts, margin })
    }
}

/// One compact time interval with its reference branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub id: ChartId,
    pub t0: f64,
    pub t1: f64,
    pub branch: ReferenceBranch,
}

impl Chart {
    pub fn length(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1
    }

    /// `n` equispaced times covering the chart, endpoints included.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.t1
                } else {
                    self.t0 + self.length() * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPartition {
    pub charts: Vec<Chart>,
    pub margin: f64,
}

impl ChartPartition {
    pub fn get(&self, id: ChartId) -> Option<&Chart> {
        self.charts.iter().find(|c| c.id == id)
    }
}

/// Manifold structure used by the analysis layer.
///
/// Problems with an S-shaped manifold carry the full fold data. A manifold
/// with a single monotone branch and no folds (such as the harmonic
/// instance) is treated as one chart spanning the whole interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Folded(CriticalManifold),
    Monotone(ReferenceBranch),
}

impl Geometry {
    pub fn analyze(p: &OscillatorProblem) -> Result<Self> {
        match CriticalManifold::new(p) {
            Ok(m) => Ok(Geometry::Folded(m)),
            Err(Error::AssumptionA1Violated(msg)) => {
                let (lo, hi) = state_bracket(p);
                let no_folds = fold_candidates(p, lo, hi)
                    .map(|c| c.is_empty())
                    .unwrap_or(false);
                let single = [p.t_begin, 0.5 * (p.t_begin + p.t_end), p.t_end]
                    .iter()
                    .all(|&t| {
                        branch_roots(p, t)
                            .map(|r| r.roots.len() == 1 && !r.has_tangent())
                            .unwrap_or(false)
                    });
                if no_folds && single {
                    Ok(Geometry::Monotone(ReferenceBranch {
                        id: BranchId::Single,
                        lower: None,
                        upper: None,
                        domain: (p.t_begin, p.t_end),
                        window: (lo, hi),
                    }))
                } else {
                    Err(Error::AssumptionA1Violated(msg))
                }
            }
            Err(e) => Err(e),
        }
    }

    pub fn manifold(&self) -> Option<&CriticalManifold> {
        match self {
            Geometry::Folded(m) => Some(m),
            Geometry::Monotone(_) => None,
        }
    }

    /// Branch defining the base level at `t`.
    pub fn home_branch(&self, t: f64) -> ReferenceBranch {
        match self {
            Geometry::Folded(m) => m
                .reference(m.home_branch(t))
                .expect("folded branches exist"),
            Geometry::Monotone(b) => *b,
        }
    }

    pub fn build_charts(
        &self,
        p: &OscillatorProblem,
        margin_fraction: f64,
    ) -> Result<ChartPartition> {
        match self {
            Geometry::Folded(m) => m.build_charts(margin_fraction),
            Geometry::Monotone(b) => Ok(ChartPartition {
                charts: vec![Chart {
                    id: ChartId::K0,
                    t0: p.t_begin,
                    t1: p.t_end,
                    branch: *b,
                }],
                margin: 0.0,
            }),
        }
    }
}

/// Grid check of the branch structure (A2) and the slope signs (A3).
///
/// At each of `grid_n` times every root of `f = m(t)` is classified by
/// position relative to the folds. Away from the folds `f'` must not
/// vanish (and neither may `m'`, so that `phi' != 0`); `f'` must be
/// negative on the middle piece and positive on the outer ones, and the
/// root count must match the number of branches alive at that time.
pub fn check_a1_a3(
    p: &OscillatorProblem,
    mani: &CriticalManifold,
    grid_n: usize,
) -> Result<ValidationReport> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument("grid_n must be at least 2".into()));
    }
    let mut report = ValidationReport::new();
    let (y_lo, y_hi) = (mani.y_min(), mani.y_max());
    let fold_gap = 1e-6 * (1.0 + (y_hi - y_lo).abs());
    for k in 0..grid_n {
        let t = p.t_begin + (p.t_end - p.t_begin) * k as f64 / (grid_n - 1) as f64;
        let set = branch_roots(p, t)?;
        let near_fold = (t - mani.t_min).abs() < 1e-9 || (t - mani.t_max).abs() < 1e-9;
        let expected = if t > mani.t_min && t < mani.t_max {
            3
        } else {
            1
        };
        if !near_fold && (set.roots.len() != expected || set.has_tangent()) {
            report.push(
                "A1",
                Some(Location::Time(t)),
                format!(
                    "{} simple roots and {} tangencies of f = m(t), expected {expected} branches",
                    set.roots.len(),
                    set.tangent.len()
                ),
            );
        }
        let mp = p.m.d1(t);
        for &y in &set.roots {
            let fp = p.f.d1(y);
            let at_fold = (y - y_lo).abs() < fold_gap || (y - y_hi).abs() < fold_gap;
            if at_fold {
                continue;
            }
            if fp == 0.0 || mp == 0.0 {
                report.push(
                    "A2",
                    Some(Location::Point { t, y }),
                    format!("phi' vanishes away from the folds (f' = {fp}, m' = {mp})"),
                );
            }
            let middle = y > y_lo && y < y_hi;
            if middle && fp >= 0.0 {
                report.push(
                    "A3",
                    Some(Location::Point { t, y }),
                    format!("f' = {fp} is not negative on the middle piece"),
                );
            } else if !middle && fp <= 0.0 {
                report.push(
                    "A3",
                    Some(Location::Point { t, y }),
                    format!("f' = {fp} is not positive on an outer piece"),
                );
            }
        }
    }
    Ok(report)
}

/// Manifold sample: `(t, u1, u2, u3)` with `None` outside a branch domain.
pub fn sample(
    p: &OscillatorProblem,
    mani: &CriticalManifold,
    n: usize,
) -> Result<Vec<(f64, [Option<f64>; 3])>> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = p.t_begin + (p.t_end - p.t_begin) * k as f64 / (n - 1) as f64;
        let mut row = [None; 3];
        for (slot, b) in row
            .iter_mut()
            .zip([BranchId::U1, BranchId::U2, BranchId::U3])
        {
            let r = mani.reference(b)?;
            if r.in_domain(t) {
                *slot = Some(r.value(p, t)?);
            }
        }
        out.push((t, row));
    }
    Ok(out)
}
