//! Folds, branches and charts of the double-well ramp, plus the A1-A4 checks.

use spduff::energy::PotentialContext;
use spduff::manifold::check_a1_a3;
use spduff::{builtin, BranchId, Geometry};

fn main() -> spduff::Result<()> {
    let p = builtin("D1")?;
    let geom = Geometry::analyze(&p)?;
    let m = geom.manifold().expect("D1 has two folds");
    println!(
        "fold min: t = {:.10}, y = {:.10}",
        m.fold_min.t_at_fold, m.fold_min.y_at_fold
    );
    println!(
        "fold max: t = {:.10}, y = {:.10}",
        m.fold_max.t_at_fold, m.fold_max.y_at_fold
    );

    for t in [-0.3, 0.0, 0.3] {
        let u: Vec<String> = [BranchId::U1, BranchId::U2, BranchId::U3]
            .into_iter()
            .map(|i| format!("{i} = {:+.6}", m.branch(&p, i, t).unwrap().u))
            .collect();
        println!("t = {t:+.1}: {}", u.join(", "));
    }

    let charts = geom.build_charts(&p, 0.05)?;
    for c in &charts.charts {
        println!(
            "{} on [{:+.4}, {:+.4}] around {}",
            c.id, c.t0, c.t1, c.branch.id
        );
    }

    let mut report = check_a1_a3(&p, m, 512)?;
    report.merge(PotentialContext::new(&p, 0.05)?.check_a4(&geom, &charts, 64, 256)?);
    println!("assumptions passed: {}", report.passed);
    Ok(())
}
