mod common;

use proptest::prelude::*;
use spduff::energy::PotentialContext;
use spduff::polar::{from_polar, gamma_rate, to_polar_w, unwrap_angles, PolarState};
use spduff::{builtin, BranchId, FunctionSpec, Geometry, TrigTerm};
use std::f64::consts::PI;

fn spec() -> impl Strategy<Value = FunctionSpec> {
    let poly = prop::collection::vec(-2.0..2.0f64, 1..6);
    let term =
        (-1.5..1.5f64, 0.1..4.0f64, -PI..PI).prop_map(|(amplitude, frequency, phase)| TrigTerm {
            amplitude,
            frequency,
            phase,
        });
    let terms = prop::collection::vec(term, 1..4);
    prop_oneof![
        poly.clone()
            .prop_map(|c| FunctionSpec::polynomial(&c).unwrap()),
        terms
            .clone()
            .prop_map(|t| FunctionSpec::trig_sum(&t).unwrap()),
        (poly, terms).prop_map(|(c, t)| FunctionSpec::sum_of_both(&c, &t).unwrap()),
    ]
}

fn central(g: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5;
    (g(x + h) - g(x - h)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn derivatives_match_differences(f in spec(), x in -1.5..1.5f64) {
        let scale = 1.0 + f.magnitude();
        prop_assert!((f.d1(x) - central(|z| f.value(z), x)).abs() < 1e-6 * scale);
        prop_assert!((f.d2(x) - central(|z| f.d1(z), x)).abs() < 1e-6 * scale);
        prop_assert!((f.value(x) - central(|z| f.antiderivative(z), x)).abs() < 1e-6 * scale);
        for (j, v) in f.jet(x).into_iter().zip([f.value(x), f.d1(x), f.d2(x)]) {
            prop_assert!((j - v).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn spec_json_round_trip(f in spec()) {
        let text = serde_json::to_string(&f).unwrap();
        let back: FunctionSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.kind(), f.kind());
        for x in [-1.0, 0.0, 0.7] {
            prop_assert!((back.value(x) - f.value(x)).abs() <= 1e-15 * (1.0 + f.value(x).abs()));
        }
    }

    #[test]
    fn branches_are_ordered_roots(frac in 0.001..0.999f64) {
        let p = builtin("D1").unwrap();
        let g = Geometry::analyze(&p).unwrap();
        let m = g.manifold().unwrap();
        let t = m.t_min + frac * (m.t_max - m.t_min);
        let u: Vec<_> = [BranchId::U1, BranchId::U2, BranchId::U3]
            .iter()
            .map(|&i| m.branch(&p, i, t).unwrap())
            .collect();
        prop_assert!(u[2].u < u[1].u && u[1].u < u[0].u);
        for b in &u {
            prop_assert!((p.f.value(b.u) - p.m.value(t)).abs() < 1e-12);
            let du = b.du.unwrap();
            prop_assert!((du * p.f.d1(b.u) - p.m.d1(t)).abs() < 1e-10);
        }
        prop_assert!(p.f.d1(u[0].u) > 0.0 && p.f.d1(u[1].u) < 0.0 && p.f.d1(u[2].u) > 0.0);
    }

    #[test]
    fn polar_round_trip(name in prop::sample::select(vec!["D1", "D2"]), frac in 0.01..0.99f64,
                        dy in -1.0..1.0f64, w in -1.0..1.0f64) {
        prop_assume!(dy.hypot(w) > 1e-6);
        let p = builtin(name).unwrap();
        let g = Geometry::analyze(&p).unwrap();
        let m = g.manifold().unwrap();
        let t = m.t_min + frac * (m.t_max - m.t_min);
        let b = m.reference(BranchId::U2).unwrap();
        let y = b.value(&p, t).unwrap() + dy;
        let s = to_polar_w(&p, &b, t, y, w).unwrap();
        prop_assert!(s.r > 0.0 && s.gamma > -PI - 1e-15 && s.gamma <= PI);
        let (y2, v2) = from_polar(&p, &b, t, s).unwrap();
        prop_assert!((y2 - y).abs() < 1e-12);
        prop_assert!((v2 - p.a.value(t) * w).abs() < 1e-12);
    }

    #[test]
    fn harmonic_angle_rate(r in 1e-6..10.0f64, gamma in -10.0..10.0f64, t in 0.0..1.0f64, eps in 1e-4..0.1f64) {
        let p = builtin("D0").unwrap();
        let Geometry::Monotone(b) = Geometry::analyze(&p).unwrap() else { unreachable!() };
        let rate = gamma_rate(&p, &b, eps, t, PolarState { r, gamma }).unwrap();
        prop_assert!((rate * eps - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn chi_matches_bracket(frac in 0.02..0.98f64, s in -1.0..1.0f64) {
        let p = builtin("D1").unwrap();
        let g = Geometry::analyze(&p).unwrap();
        let m = g.manifold().unwrap();
        let ctx = PotentialContext::new(&p, 0.05).unwrap();
        let t = m.t_min + frac * (m.t_max - m.t_min);
        let u2 = m.branch(&p, BranchId::U2, t).unwrap().u;
        let y = u2 + 1.5 * s;
        prop_assume!((y - u2).abs() > 1e-2);
        let oracle = common::chi_by_differences(&[0.0, -1.0, 0.0, 1.0], -t, u2, y);
        prop_assert!((ctx.chi(&g, t, y).unwrap() - oracle).abs() < 1e-6);
    }

    #[test]
    fn unwrapped_steps_are_short(raw in prop::collection::vec(-PI..PI, 2..40)) {
        let mut a = raw.clone();
        unwrap_angles(&mut a);
        for (k, w) in a.windows(2).enumerate() {
            let d = w[1] - w[0];
            prop_assert!((-PI - 1e-12..PI + 1e-12).contains(&d));
            let turns = (a[k + 1] - raw[k + 1]) / (2.0 * PI);
            prop_assert!((turns - turns.round()).abs() < 1e-9);
        }
    }
}
