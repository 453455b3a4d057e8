//! Frozen-time potential, turning points, action and frequency.

use spduff::energy::{PotentialContext, Well};
use spduff::{builtin, Geometry};

fn main() -> spduff::Result<()> {
    let p = builtin("D1")?;
    let geom = Geometry::analyze(&p)?;
    let ctx = PotentialContext::new(&p, 0.05)?;

    for t in [-0.5, 0.0, 0.5] {
        let level = ctx.base_level(&geom, t)? + ctx.delta;
        let tp = ctx.turning_points(t, level)?;
        let af = ctx.action_frequency(t, level, Well::Outer)?;
        println!(
            "t = {t:+.1}: H0 + delta = {level:+.6}, y_L = {:+.6}, y_R = {:+.6}, I = {:.6}, omega = {:.6}",
            tp.y_left, tp.y_right, af.action, af.omega
        );
    }

    // small orbits in the right well approach sqrt(f'(1)) = sqrt(2)
    for gap in [1e-2, 1e-4, 1e-6] {
        let af = ctx.action_frequency(0.0, ctx.potential(0.0, 1.0) + gap, Well::Right)?;
        println!("H - V_min = {gap:.0e}: omega = {:.8}", af.omega);
    }
    Ok(())
}
