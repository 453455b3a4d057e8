//! Bracketing root finders for scalar functions.

/// Intervals `[x_k, x_{k+1}]` of a uniform grid on which `g` changes sign.
///
/// A grid point where `g` vanishes exactly yields a degenerate bracket
/// `[x, x]`.
pub fn sign_changes(mut g: impl FnMut(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut out = Vec::new();
    let mut x_prev = lo;
    let mut g_prev = g(lo);
    if g_prev == 0.0 {
        out.push((lo, lo));
    }
    for k in 1..n {
        let x = if k + 1 == n { hi } else { lo + k as f64 * step };
        let gx = g(x);
        if gx == 0.0 {
            out.push((x, x));
        } else if g_prev != 0.0 && (g_prev < 0.0) != (gx < 0.0) {
            out.push((x_prev, x));
        }
        x_prev = x;
        g_prev = gx;
    }
    out
}

/// Safeguarded Newton–bisection on a sign-changing bracket.
///
/// `jet` returns `(g(x), g'(x))`. The bracket is kept throughout, so the
/// iteration falls back to bisection whenever Newton leaves it or stalls.
pub fn newton_bisect(mut jet: impl FnMut(f64) -> (f64, f64), lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (ga, _) = jet(a);
    if ga == 0.0 {
        return a;
    }
    let (gb, _) = jet(b);
    if gb == 0.0 {
        return b;
    }
    // orient so that g(a) < 0 < g(b)
    let flip = ga > 0.0;
    let sgn = |v: f64| if flip { -v } else { v };
    let mut x = 0.5 * (a + b);
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    let (mut gx, mut dgx) = jet(x);
    for _ in 0..200 {
        let gs = sgn(gx);
        if gs == 0.0 {
            return x;
        }
        if gs < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton_ok = dgx != 0.0 && {
            let xn = x - gx / dgx;
            xn > a && xn < b && (2.0 * gx).abs() <= (dx_old * dgx).abs()
        };
        dx_old = dx;
        let x_new = if newton_ok {
            dx = gx / dgx;
            x - dx
        } else {
            dx = 0.5 * (b - a);
            a + dx
        };
        if x_new == x || (b - a) <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            x = x_new;
            break;
        }
        x = x_new;
        let j = jet(x);
        gx = j.0;
        dgx = j.1;
    }
    // final Newton polish, accepted only if it improves the residual
    let (g0, d0) = jet(x);
    if d0 != 0.0 {
        let xn = x - g0 / d0;
        if xn.is_finite() && jet(xn).0.abs() < g0.abs() {
            return xn;
        }
    }
    x
}

/// Plain bisection to `tol` on a sign-changing bracket.
pub fn bisect(mut g: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut ga = g(a);
    if ga == 0.0 {
        return a;
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return m;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Walk outward from `start` in direction `dir` (+1 or -1) until `pred`
/// holds, doubling the stride each time. Returns the first point found.
pub fn expand_until(
    start: f64,
    dir: f64,
    initial_step: f64,
    mut pred: impl FnMut(f64) -> bool,
) -> Option<f64> {
    let mut step = initial_step.abs().max(1e-3);
    for _ in 0..80 {
        let x = start + dir * step;
        if !x.is_finite() {
            return None;
        }
        if pred(x) {
            return Some(x);
        }
        step *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots_by_scan() {
        let g = |y: f64| y * y * y - y;
        let brackets = sign_changes(g, -2.0, 2.0, 101);
        let roots: Vec<f64> = brackets
            .into_iter()
            .map(|(a, b)| newton_bisect(|y| (g(y), 3.0 * y * y - 1.0), a, b))
            .collect();
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((r - e).abs() < 1e-15, "{r} vs {e}");
        }
    }

    #[test]
    fn newton_bisect_matches_bisection() {
        let g = |y: f64| y * y * y - y + 0.5;
        let a = newton_bisect(|y| (g(y), 3.0 * y * y - 1.0), -2.0, -1.0);
        let b = bisect(g, -2.0, -1.0, 1e-15);
        assert!((a - b).abs() < 1e-14);
        assert!(g(a).abs() < 1e-15);
    }

    #[test]
    fn expansion_finds_far_crossing() {
        let x = expand_until(0.0, 1.0, 0.1, |x| x > 1000.0).unwrap();
        assert!(x > 1000.0 && x < 3000.0);
    }
}
