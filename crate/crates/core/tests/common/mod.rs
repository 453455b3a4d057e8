#![allow(dead_code)]

use spduff::OscillatorProblem;

/// Plain bisection for a sign change on `[lo, hi]`.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    assert!(glo * g(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub const Y_FOLD: f64 = 0.577_350_269_189_625_8;

/// Branches of `y^3 - y = -t` by bisection on their closed-form ranges.
pub fn d1_branch(i: u8, t: f64) -> f64 {
    let g = |y: f64| y * y * y - y + t;
    match i {
        1 => bisect(g, Y_FOLD, 3.0),
        2 => bisect(g, -Y_FOLD, Y_FOLD),
        3 => bisect(g, -3.0, -Y_FOLD),
        _ => unreachable!(),
    }
}

/// Fixed-step classical RK4 in fast time for `(y, w)`, `n` steps of `h`.
/// Returns the state after every step.
pub fn rk4(
    p: &OscillatorProblem,
    eps: f64,
    t0: f64,
    y0: [f64; 2],
    h: f64,
    n: usize,
) -> Vec<(f64, [f64; 2])> {
    let rhs = |s: f64, u: [f64; 2]| {
        let t = t0 + eps * s;
        let a = p.a.value(t);
        let da = p.a.d1(t);
        [
            u[1] / a,
            (p.m.value(t) - p.f.value(u[0])) / a - eps * da / a * u[1],
        ]
    };
    let mut out = Vec::with_capacity(n + 1);
    let mut u = y0;
    out.push((t0, u));
    for k in 0..n {
        let s = k as f64 * h;
        let k1 = rhs(s, u);
        let k2 = rhs(
            s + 0.5 * h,
            [u[0] + 0.5 * h * k1[0], u[1] + 0.5 * h * k1[1]],
        );
        let k3 = rhs(
            s + 0.5 * h,
            [u[0] + 0.5 * h * k2[0], u[1] + 0.5 * h * k2[1]],
        );
        let k4 = rhs(s + h, [u[0] + h * k3[0], u[1] + h * k3[1]]);
        for j in 0..2 {
            u[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push((t0 + eps * (k + 1) as f64 * h, u));
    }
    out
}

/// `int_u^y (f(s) - m) ds` for a polynomial `f` from its coefficients.
pub fn poly_well_integral(coeffs: &[f64], m: f64, u: f64, y: f64) -> f64 {
    let mut s = -m * (y - u);
    for (k, c) in coeffs.iter().enumerate() {
        let n = (k + 1) as i32;
        s += c * (y.powi(n) - u.powi(n)) / n as f64;
    }
    s
}

/// `(y - u) d/dy [ I(y) / ((y - u)^2 / 2) ]` by central differences.
pub fn chi_by_differences(coeffs: &[f64], m: f64, u: f64, y: f64) -> f64 {
    let g = |z: f64| poly_well_integral(coeffs, m, u, z) / (0.5 * (z - u) * (z - u));
    let h = 1e-4 * (y - u).abs().max(1e-2);
    (y - u) * (g(y + h) - g(y - h)) / (2.0 * h)
}
