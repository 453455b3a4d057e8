//! Writes the manifold picture and frozen-time phase portraits as SVG.
//!
//! ```text
//! cargo run --example phase_portrait -- /tmp/portraits
//! ```

use std::fs;
use std::path::PathBuf;

use spduff::cli::{portrait_file_name, portrait_times};
use spduff::energy::PotentialContext;
use spduff::output;
use spduff::{builtin, Geometry};

fn main() -> spduff::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "portraits".into()),
    );
    fs::create_dir_all(&dir)?;
    let p = builtin("D1")?;
    let geom = Geometry::analyze(&p)?;
    let ctx = PotentialContext::new(&p, 0.05)?;

    fs::write(dir.join("manifold.svg"), output::manifold_svg(&p, &geom)?)?;
    for t in portrait_times(&p, &geom) {
        let path = dir.join(portrait_file_name(t));
        fs::write(&path, output::phase_portrait_svg(&ctx, &geom, t)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
