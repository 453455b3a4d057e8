mod common;

use common::{chi_by_differences, d1_branch};
use spduff::energy::{PotentialContext, Well};
use spduff::problem::Location;
use spduff::{builtin, ChartId, Error, FunctionSpec, Geometry, OscillatorProblem};

#[test]
fn base_level_examples() {
    let p = builtin("D1").unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    let g = Geometry::analyze(&p).unwrap();
    assert_eq!(ctx.base_level(&g, 0.0).unwrap(), 0.0);
    let u = d1_branch(3, 0.5);
    let h = ctx.base_level(&g, 0.5).unwrap();
    assert!((h - (u.powi(4) / 4.0 - u * u / 2.0 + 0.5 * u)).abs() < 1e-12);
    assert!((h + 0.8017).abs() < 1e-4);
    assert!((ctx.base_level(&g, -0.5).unwrap() - h).abs() < 1e-12);
}

#[test]
fn turning_point_examples() {
    let p = builtin("D1").unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    let tp = ctx.turning_points(0.0, 0.05).unwrap();
    // y^2 = 1 + sqrt(1.2) from y^4 - 2 y^2 - 0.2 = 0
    let e = (1.0 + 1.2f64.sqrt()).sqrt();
    assert!((e - 1.4475652).abs() < 1e-7);
    assert!((tp.y_right - e).abs() < 1e-12 && (tp.y_left + e).abs() < 1e-12);
    let tp = ctx.turning_points(0.0, 0.0).unwrap();
    assert!((tp.y_right - 2f64.sqrt()).abs() < 1e-12);
    assert!(matches!(
        ctx.turning_points(0.0, -1.0),
        Err(Error::NoTurningPoints { .. })
    ));
}

#[test]
fn turning_points_bracket_branches() {
    let p = builtin("D1").unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    let g = Geometry::analyze(&p).unwrap();
    let m = g.manifold().unwrap();
    for chart in &g.build_charts(&p, 0.05).unwrap().charts {
        for t in chart.grid(33) {
            let level = ctx.base_level(&g, t).unwrap() + 0.05;
            let tp = ctx.turning_points(t, level).unwrap();
            assert!(tp.y_left < tp.y_right);
            for y in [tp.y_left, tp.y_right] {
                assert!((ctx.potential(t, y) - level).abs() < 1e-12);
            }
            for k in 1..64 {
                let y = tp.y_left + (tp.y_right - tp.y_left) * k as f64 / 64.0;
                assert!(ctx.potential(t, y) < level);
            }
            let alive = spduff::manifold::branch_roots(&p, t).unwrap().roots;
            assert!(tp.y_left < alive[0] && *alive.last().unwrap() < tp.y_right);
            if chart.id == ChartId::K2 {
                assert_eq!(alive.len(), 3);
                assert!(m.t_min < t && t < m.t_max);
            }
        }
    }
}

#[test]
fn potential_gradient() {
    for n in ["D0", "D1", "D2"] {
        let p = builtin(n).unwrap();
        let ctx = PotentialContext::new(&p, 0.05).unwrap();
        for k in 0..200 {
            let t = p.t_begin + p.length() * (k as f64 * 0.618).fract();
            let y = -2.0 + 4.0 * (k as f64 * 0.377).fract();
            let h = 1e-6;
            let fd = (ctx.potential(t, y + h) - ctx.potential(t, y - h)) / (2.0 * h);
            let exact = p.f.value(y) - p.m.value(t);
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                "{n} {t} {y}"
            );
        }
    }
}

#[test]
fn chi_examples() {
    let p = builtin("D1").unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    let g = Geometry::analyze(&p).unwrap();
    assert!((ctx.chi(&g, 0.0, 0.5).unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(ctx.chi(&g, 0.0, 1e-8).unwrap(), 0.0);
    let u = d1_branch(2, 0.2);
    let oracle = chi_by_differences(&[0.0, -1.0, 0.0, 1.0], -0.2, u, 0.3);
    assert!((ctx.chi(&g, 0.2, 0.3).unwrap() - oracle).abs() < 1e-6);
}

#[test]
fn a4_examples() {
    let p = builtin("D1").unwrap();
    let g = Geometry::analyze(&p).unwrap();
    let charts = g.build_charts(&p, 0.05).unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    assert!(ctx.check_a4(&g, &charts, 64, 256).unwrap().passed);
    assert!(matches!(
        PotentialContext::new(&p, 0.0),
        Err(Error::InvalidDelta(_))
    ));

    // a deep outer well pulls chi far below -4 Delta / (y - u2)^2
    let coeffs = [0.0, -1.0, 0.0, -3.0, 0.0, 1.0];
    let q = OscillatorProblem::new(
        FunctionSpec::polynomial(&[1.0]).unwrap(),
        FunctionSpec::polynomial(&[0.0, -1.0]).unwrap(),
        FunctionSpec::polynomial(&coeffs).unwrap(),
        -6.0,
        6.0,
    );
    let g = Geometry::analyze(&q).unwrap();
    let charts = g.build_charts(&q, 0.05).unwrap();
    let ctx = PotentialContext::new(&q, 0.05).unwrap();
    let r = ctx.check_a4(&g, &charts, 32, 128).unwrap();
    assert!(!r.passed && r.has_check("A4"));
    let m = g.manifold().unwrap();
    for v in &r.violations {
        let Some(Location::Point { t, y }) = v.location else {
            panic!("witness without location")
        };
        let u2 = m.branch(&q, spduff::BranchId::U2, t).unwrap().u;
        let chi = chi_by_differences(&coeffs, -t, u2, y);
        assert!(
            chi <= -4.0 * 0.05 / ((y - u2) * (y - u2)) + 1e-6,
            "witness at ({t}, {y})"
        );
    }
}

#[test]
fn action_examples() {
    let d0 = builtin("D0").unwrap();
    let ctx = PotentialContext::new(&d0, 0.05).unwrap();
    for h in [0.01, 0.5, 2.0] {
        let af = ctx.action_frequency(0.5, h, Well::Outer).unwrap();
        assert!((af.omega - 1.0).abs() < 1e-8 && (af.action - h).abs() < 1e-8);
    }
    let p = builtin("D1").unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    let af = ctx.action_frequency(0.0, -0.2, Well::Right).unwrap();
    assert!(af.omega > 0.0 && af.action > 0.0);
    assert!(af.orbit.y_left > 0.0);
    assert!(matches!(
        ctx.action_frequency(0.0, 0.0, Well::Outer),
        Err(Error::SeparatrixLevel { .. })
    ));
}

#[test]
fn frequency_positive_on_orbits() {
    for n in ["D1", "D2"] {
        let p = builtin(n).unwrap();
        let ctx = PotentialContext::new(&p, 0.05).unwrap();
        let g = Geometry::analyze(&p).unwrap();
        for k in 0..=20 {
            let t = -1.0 + 0.1 * k as f64;
            let level = ctx.base_level(&g, t).unwrap() + 0.05;
            let well = if ctx.critical_points(t).len() == 3 {
                Well::Outer
            } else {
                Well::Right
            };
            let af = match ctx.action_frequency(t, level, well) {
                Ok(a) => a,
                Err(_) => ctx.action_frequency(t, level, Well::Left).unwrap(),
            };
            assert!(af.omega > 0.0 && af.action > 0.0, "{n} t={t}");
        }
    }
}

#[test]
fn well_bottom_limit() {
    let p = builtin("D2").unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    let t = 0.6;
    let crit = ctx.critical_points(t);
    let y = crit.iter().copied().find(|&y| p.f.d1(y) > 0.0).unwrap();
    let af = ctx
        .action_frequency(t, ctx.potential(t, y) + 1e-6, Well::Outer)
        .or_else(|_| ctx.action_frequency(t, ctx.potential(t, y) + 1e-6, Well::Left))
        .unwrap();
    let limit = p.f.d1(y).sqrt() / p.a.value(t);
    assert!(
        (af.omega - limit).abs() < 0.01 * limit,
        "{} vs {limit}",
        af.omega
    );
}
