//! Chart constants r_min, eta, delta1, delta2 and the deflated rate bound c.

use spduff::energy::PotentialContext;
use spduff::polar::{compute_constants, ConstantGrids};
use spduff::{builtin, Error, Geometry};

fn main() -> spduff::Result<()> {
    for name in ["D1", "D2"] {
        let p = builtin(name)?;
        let geom = Geometry::analyze(&p)?;
        let charts = geom.build_charts(&p, 0.05)?;
        let ctx = PotentialContext::new(&p, 0.05)?;
        for k in compute_constants(&ctx, &geom, &charts, 0.01, ConstantGrids::default())? {
            println!(
                "{name} {}: r_min = {:.6}, eta = {:.4}, delta1 = {:?}, delta2 = {:?}, c = {:.6}",
                k.chart_id, k.r_min, k.eta, k.delta1, k.delta2, k.c
            );
        }
    }

    // the middle chart has no positive bound once eps is too large
    let p = builtin("D1")?;
    let geom = Geometry::analyze(&p)?;
    let charts = geom.build_charts(&p, 0.05)?;
    let ctx = PotentialContext::new(&p, 0.05)?;
    match compute_constants(&ctx, &geom, &charts, 0.2, ConstantGrids::default()) {
        Err(e @ Error::EpsilonTooLarge { .. }) => println!("eps = 0.2: {e}"),
        other => println!("eps = 0.2: {other:?}"),
    }
    Ok(())
}
