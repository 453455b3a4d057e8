use spduff::analysis::{run_chart, AnalysisOptions};
use spduff::energy::PotentialContext;
use spduff::polar::{
    chart_constants, compute_constants, gamma_rate, ConstantGrids, PolarState, DEFLATION,
};
use spduff::{builtin, BranchId, ChartId, Error, Geometry};

#[test]
fn rate_at_quarter_turn() {
    let p = builtin("D2").unwrap();
    let g = Geometry::analyze(&p).unwrap();
    let m = g.manifold().unwrap();
    let eps = 0.02;
    for (i, t) in [
        (BranchId::U1, -0.7),
        (BranchId::U2, 0.1),
        (BranchId::U3, 0.8),
    ] {
        let b = m.reference(i).unwrap();
        let bp = b.eval(&p, t).unwrap();
        let a = p.a.value(t);
        for r in [0.05, 0.4] {
            let s = PolarState {
                r,
                gamma: std::f64::consts::FRAC_PI_2,
            };
            let expect = (1.0 / (a * a) + eps * bp.du.unwrap() / r) / eps;
            let got = gamma_rate(&p, &b, eps, t, s).unwrap();
            assert!((got - expect).abs() <= 1e-12 * expect.abs(), "{i} {t} {r}");
        }
    }
}

#[test]
fn rate_needs_branch_derivative() {
    let p = builtin("D1").unwrap();
    let g = Geometry::analyze(&p).unwrap();
    let m = g.manifold().unwrap();
    let b = m.reference(BranchId::U2).unwrap();
    let s = PolarState { r: 0.1, gamma: 0.3 };
    assert!(matches!(
        gamma_rate(&p, &b, 0.01, m.t_max, s),
        Err(Error::BranchDerivativeUnavailable { .. })
    ));
    assert!(matches!(
        gamma_rate(&p, &b, 0.01, 0.0, PolarState { r: 0.0, gamma: 0.0 }),
        Err(Error::PolarSingularity)
    ));
}

#[test]
fn constant_invariants() {
    for n in ["D0", "D1", "D2"] {
        let p = builtin(n).unwrap();
        let g = Geometry::analyze(&p).unwrap();
        let charts = g.build_charts(&p, 0.05).unwrap();
        let ctx = PotentialContext::new(&p, 0.05).unwrap();
        for eps in [0.02, 0.01, 0.005] {
            for k in compute_constants(&ctx, &g, &charts, eps, ConstantGrids::default()).unwrap() {
                let chart = charts.get(k.chart_id).unwrap();
                let min_inv_a2 = chart
                    .grid(64)
                    .iter()
                    .map(|&t| p.a.value(t).powi(-2))
                    .fold(f64::INFINITY, f64::min);
                assert!(k.r_min > 0.0 && k.c > 0.0);
                assert!(k.eta > 0.0 && k.eta < min_inv_a2);
                assert_eq!(k.c, DEFLATION * k.c_raw);
                assert_eq!(k.delta1.is_some(), k.chart_id == ChartId::K2);
                if k.chart_id == ChartId::K2 {
                    assert!(k.delta1.unwrap() > 0.0 && k.delta2.unwrap() > 0.0);
                }
            }
        }
    }
}

#[test]
fn middle_chart_regression() {
    let p = builtin("D1").unwrap();
    let g = Geometry::analyze(&p).unwrap();
    let charts = g.build_charts(&p, 0.05).unwrap();
    let ctx = PotentialContext::new(&p, 0.05).unwrap();
    let k2 = charts.get(ChartId::K2).unwrap();
    let k = chart_constants(&ctx, &g, k2, 0.01, ConstantGrids::default()).unwrap();
    assert!((k.c - 0.055548841457).abs() < 1e-9, "{}", k.c);
    assert!((k.r_min - 0.1f64.sqrt()).abs() < 1e-12);
    assert!(matches!(
        chart_constants(&ctx, &g, k2, 0.2, ConstantGrids::default()),
        Err(Error::EpsilonTooLarge {
            chart: ChartId::K2,
            ..
        })
    ));
}

#[test]
fn refinement_does_not_raise_c() {
    let coarse = ConstantGrids {
        n_t: 33,
        n_y: 129,
        n_gamma: 32,
    };
    let fine = ConstantGrids {
        n_t: 129,
        n_y: 513,
        n_gamma: 128,
    };
    for n in ["D1", "D2"] {
        let p = builtin(n).unwrap();
        let g = Geometry::analyze(&p).unwrap();
        let charts = g.build_charts(&p, 0.05).unwrap();
        let ctx = PotentialContext::new(&p, 0.05).unwrap();
        for chart in &charts.charts {
            let a = chart_constants(&ctx, &g, chart, 0.01, coarse).unwrap();
            let b = chart_constants(&ctx, &g, chart, 0.01, fine).unwrap();
            assert!(
                b.c <= a.c / DEFLATION,
                "{n} {}: {} vs {}",
                chart.id,
                b.c,
                a.c
            );
        }
    }
}

#[test]
fn angle_is_monotone_on_trajectories() {
    // the bound gamma' >= c / eps needs the trajectory energy near H0 + Delta;
    // at eps = 0.02 the middle chart drifts below it (see the notes)
    for n in ["D0", "D1"] {
        let p = builtin(n).unwrap();
        let g = Geometry::analyze(&p).unwrap();
        let charts = g.build_charts(&p, 0.05).unwrap();
        let ctx = PotentialContext::new(&p, 0.05).unwrap();
        for eps in [0.01, 0.005] {
            for chart in &charts.charts {
                let r = run_chart(&ctx, &g, chart, eps, &AnalysisOptions::default())
                    .unwrap()
                    .report;
                assert!(r.gamma_increasing, "{n} {} {eps}", chart.id);
                assert!(
                    r.min_rate_ratio >= 1.0,
                    "{n} {} {eps}: {}",
                    chart.id,
                    r.min_rate_ratio
                );
            }
        }
    }
}
