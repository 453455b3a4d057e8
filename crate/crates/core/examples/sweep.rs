//! Oscillation reports over the default epsilon list.

use spduff::analysis::{envelope_convergence, run_sweep, AnalysisOptions, DEFAULT_EPSILONS};
use spduff::{builtin, ChartId};

fn main() -> spduff::Result<()> {
    let sweep = run_sweep(
        "D1",
        &builtin("D1")?,
        &DEFAULT_EPSILONS,
        0.05,
        &AnalysisOptions::default(),
    )?;
    println!("eps     chart  z    s_max       bound       passed");
    for e in &sweep.entries {
        for r in &e.reports {
            println!(
                "{:<7} {:<6} {:<4} {:.6e} {:.6e} {}",
                e.epsilon,
                r.chart_id.to_string(),
                r.zero_count,
                r.max_spacing,
                r.bound,
                r.passed()
            );
        }
    }
    for r in &sweep.ratios {
        println!(
            "z({}) / z({}) on {}: {:.3}",
            r.epsilon,
            2.0 * r.epsilon,
            r.chart_id,
            r.ratio
        );
    }
    for (eps, err) in envelope_convergence(&sweep, ChartId::K2)? {
        println!("K2 envelope error at {eps}: {err:.4}");
    }
    Ok(())
}
