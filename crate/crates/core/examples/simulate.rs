//! One trajectory from the standard start, with crossings of the middle
//! branch and the energy-identity residual.

use spduff::energy::PotentialContext;
use spduff::simulate::{self, SolverOptions};
use spduff::{builtin, ChartId, Geometry};

fn main() -> spduff::Result<()> {
    let p = builtin("D1")?;
    let geom = Geometry::analyze(&p)?;
    let charts = geom.build_charts(&p, 0.05)?;
    let ctx = PotentialContext::new(&p, 0.05)?;
    let k2 = charts.get(ChartId::K2).unwrap();
    let eps = 0.01;

    let (y0, w0) = simulate::standard_initial_condition(&ctx, &geom, k2.t0)?;
    let traj = simulate::integrate(&p, eps, y0, w0, (k2.t0, k2.t1), &SolverOptions::default())?;
    println!(
        "{} accepted steps on [{:.4}, {:.4}]",
        traj.steps(),
        k2.t0,
        k2.t1
    );

    let scan = simulate::detect_crossings(&traj, &p, &k2.branch, (k2.t0, k2.t1))?;
    for e in scan.events.iter().take(5) {
        println!("  crossing at t = {:.8} ({:?})", e.t_star, e.direction);
    }
    println!(
        "{} crossings, alternating: {}",
        scan.events.len(),
        simulate::alternates(&scan.events)
    );

    let energy = simulate::energy_along(&traj, &p, 1001)?;
    let worst = energy.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
    println!("max |dH/dt + (a'/a) w^2 + m' y| = {worst:.3e}");
    Ok(())
}
