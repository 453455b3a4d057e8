mod common;

use spduff::energy::PotentialContext;
use spduff::ode::{self, StepControl};
use spduff::simulate::{
    alternates, detect_crossings, energy_along, integrate, standard_initial_condition,
    SolverOptions, CROSSING_TOL,
};
use spduff::{builtin, Error, FunctionSpec, Geometry, OscillatorProblem};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn conservative_d1() -> OscillatorProblem {
    let mut p = builtin("D1").unwrap();
    p.m = FunctionSpec::polynomial(&[0.0]).unwrap();
    p
}

#[test]
fn conservative_energy_is_constant() {
    let p = conservative_d1();
    let tr = integrate(&p, 0.01, 1.3, 0.0, (-1.0, 0.0), &opts()).unwrap();
    let e = energy_along(&tr, &p, 4001).unwrap();
    let h0 = e[0].h;
    let drift = e.iter().map(|s| (s.h - h0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-8, "drift {drift:e}");
}

#[test]
fn matches_rk4_reference() {
    let p = builtin("D1").unwrap();
    let eps = 0.02;
    let (t0, y0) = (-1.0, [1.2, 0.0]);
    let h = 1e-4;
    let n = 500_000;
    let reference = common::rk4(&p, eps, t0, y0, h, n);
    let t1 = reference.last().unwrap().0;
    let tr = integrate(&p, eps, y0[0], y0[1], (t0, t1), &opts()).unwrap();
    let mut worst: f64 = 0.0;
    for (t, u) in reference.iter().step_by(50) {
        let s = tr.state_at(*t).unwrap();
        worst = worst.max((s[0] - u[0]).abs()).max((s[1] - u[1]).abs());
    }
    assert!(worst <= 1e-6, "sup difference {worst:e}");
}

#[test]
fn energy_residual_examples() {
    let d0 = builtin("D0").unwrap();
    let tr = integrate(&d0, 0.01, 1.0, 0.0, (0.0, 1.0), &opts()).unwrap();
    let e = energy_along(&tr, &d0, 2001).unwrap();
    assert!(e
        .iter()
        .all(|s| s.residual.abs() <= 1e-8 && (s.h - 0.5).abs() <= 1e-8));

    // the residual measures the interpolant derivative; its error goes like
    // h^7 in fast time and is divided by eps, so halve the step cap
    let d1 = builtin("D1").unwrap();
    let fine = SolverOptions {
        max_step_fast: 0.05,
        ..opts()
    };
    let tr = integrate(&d1, 0.01, 1.3, 0.0, (-1.0, 1.0), &fine).unwrap();
    let y_max = tr.samples.iter().map(|s| s.y.abs()).fold(0.0, f64::max);
    let e = energy_along(&tr, &d1, 4001).unwrap();
    // a = 1, m' = -1: dH/dt = y
    for s in &e {
        assert!(
            s.residual.abs() <= 1e-6 * y_max,
            "{} at {}",
            s.residual,
            s.t
        );
    }
}

#[test]
fn damped_energy_decays() {
    let mut p = builtin("D2").unwrap();
    p.m = FunctionSpec::polynomial(&[0.0]).unwrap();
    let tr = integrate(&p, 0.01, 1.3, 0.0, (-1.0, 1.0), &opts()).unwrap();
    let e = energy_along(&tr, &p, 4001).unwrap();
    let y_max = tr.samples.iter().map(|s| s.y.abs()).fold(1.0, f64::max);
    let mut strictly = 0;
    for s in &e {
        let [_, w] = tr.state_at(s.t).unwrap();
        let a = p.a.jet(s.t);
        let dh = s.residual - a[1] / a[0] * w * w;
        // sign up to the interpolant noise floor of the residual
        assert!(dh <= 1e-6 * y_max, "dH/dt = {dh} at {}", s.t);
        strictly += (dh < 0.0) as usize;
    }
    assert!(strictly > e.len() * 9 / 10);
    assert!(e.last().unwrap().h < e[0].h);
}

#[test]
fn slow_time_formulation_agrees() {
    let p = builtin("D2").unwrap();
    let eps = 0.02;
    let (t0, t1, y0, w0) = (-1.0, -0.5, 1.3, 0.2);
    let tr = integrate(&p, eps, y0, w0, (t0, t1), &opts()).unwrap();
    // eps y' = v / a^2, eps v' = m - f in slow time
    let sys = |t: f64, s: &[f64; 2]| {
        let a = p.a.value(t);
        [s[1] / (a * a) / eps, (p.m.value(t) - p.f.value(s[0])) / eps]
    };
    let ctl = StepControl {
        rtol: 1e-12,
        atol: 1e-14,
        h_max: 1e-3,
        ..StepControl::default()
    };
    let v0 = p.a.value(t0) * w0;
    let sol = ode::solve(&sys, t0, [y0, v0], t1, &ctl).unwrap();
    for (t, s) in sol.xs.iter().zip(&sol.ys).step_by(7) {
        let [y, w] = tr.state_at(*t).unwrap();
        assert!((y - s[0]).abs() <= 1e-8, "y at {t}");
        assert!((w - s[1] / p.a.value(*t)).abs() <= 1e-8, "w at {t}");
    }
}

#[test]
fn dense_output_matches_half_steps() {
    let p = builtin("D1").unwrap();
    let eps = 0.01;
    let o = opts();
    let tr = integrate(&p, eps, 1.3, 0.0, (-1.0, 0.0), &o).unwrap();
    let tight = SolverOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..o
    };
    for w in tr.samples.windows(2).step_by(97) {
        let mid = 0.5 * (w[0].t + w[1].t);
        let re = integrate(&p, eps, w[0].y, w[0].w, (w[0].t, mid), &tight).unwrap();
        let end = re.samples.last().unwrap();
        let s = tr.state_at(mid).unwrap();
        let scale = 1.0 + end.y.abs().max(end.w.abs());
        assert!((s[0] - end.y).abs() <= 10.0 * o.rel_tol * scale);
        assert!((s[1] - end.w).abs() <= 10.0 * o.rel_tol * scale);
    }
}

#[test]
fn harmonic_crossing_count() {
    let p = builtin("D0").unwrap();
    let g = Geometry::analyze(&p).unwrap();
    let tr = integrate(&p, 0.01, 1.0, 0.0, (0.0, 1.0), &opts()).unwrap();
    let scan = detect_crossings(&tr, &p, &g.home_branch(0.0), (0.0, 1.0)).unwrap();
    assert!(
        matches!(scan.events.len(), 31 | 32),
        "{}",
        scan.events.len()
    );
    assert_eq!(scan.tangential, 0);
}

#[test]
fn crossings_alternate_on_charts() {
    for n in ["D1", "D2"] {
        let p = builtin(n).unwrap();
        let g = Geometry::analyze(&p).unwrap();
        let ctx = PotentialContext::new(&p, 0.05).unwrap();
        for chart in &g.build_charts(&p, 0.05).unwrap().charts {
            let (y0, w0) = standard_initial_condition(&ctx, &g, chart.t0).unwrap();
            let tr = integrate(&p, 0.01, y0, w0, (chart.t0, chart.t1), &opts()).unwrap();
            let scan = detect_crossings(&tr, &p, &chart.branch, (chart.t0, chart.t1)).unwrap();
            assert!(!scan.events.is_empty());
            assert!(alternates(&scan.events), "{n} {}", chart.id);
            for e in &scan.events {
                let scale = 1.0 + chart.branch.value(&p, e.t_star).unwrap().abs();
                assert!(e.residual <= CROSSING_TOL * scale);
            }
        }
    }
}

#[test]
fn standard_start_is_on_the_level() {
    let p = builtin("D1").unwrap();
    let g = Geometry::analyze(&p).unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    for t0 in [-1.0, -0.2, 0.7] {
        let (y0, w0) = standard_initial_condition(&ctx, &g, t0).unwrap();
        assert_eq!(w0, 0.0);
        let level = ctx.base_level(&g, t0).unwrap() + 0.05;
        assert!((ctx.potential(t0, y0) - level).abs() < 1e-12);
        assert_eq!(y0, ctx.turning_points(t0, level).unwrap().y_right);
    }
}

#[test]
fn blow_up_is_reported() {
    let mut p = builtin("D1").unwrap();
    p.f = FunctionSpec::polynomial(&[0.0, 0.0, 0.0, -1.0]).unwrap();
    let r = integrate(&p, 0.1, 2.0, 1.0, (-1.0, 1.0), &opts());
    assert!(
        matches!(
            r,
            Err(Error::Divergence { .. }) | Err(Error::StiffnessFailure { .. })
        ),
        "{r:?}"
    );
}
