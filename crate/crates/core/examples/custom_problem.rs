//! A problem built in code with sinusoidal forcing, saved as JSON and read
//! back. The file works with `spduff check <file>`.

use spduff::manifold::check_a1_a3;
use spduff::{FunctionSpec, Geometry, OscillatorProblem, TrigTerm};

fn main() -> spduff::Result<()> {
    let p = OscillatorProblem::new(
        FunctionSpec::polynomial(&[1.0, 0.1])?,
        FunctionSpec::trig_sum(&[TrigTerm {
            amplitude: -0.6,
            frequency: 2.0,
            phase: 0.0,
        }])?,
        FunctionSpec::polynomial(&[0.0, -1.0, 0.0, 1.0])?,
        -0.7,
        0.7,
    );
    let report = p.validate(256)?;
    println!("well-posed: {}", report.passed);

    let text = p.to_json()?;
    println!("{text}");
    let back = OscillatorProblem::from_json(&text)?;
    assert_eq!(back, p);

    match Geometry::analyze(&p)? {
        Geometry::Folded(m) => {
            println!("folds at t = {:.6} and t = {:.6}", m.t_min, m.t_max);
            let r = check_a1_a3(&p, &m, 256)?;
            for v in &r.violations {
                println!("  {}: {}", v.check, v.detail);
            }
            println!("A1-A3 passed: {}", r.passed);
        }
        Geometry::Monotone(_) => println!("no folds"),
    }
    Ok(())
}
