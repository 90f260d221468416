//! Write the three synthetic fixtures as labeled PLY files.
//!
//! `cargo run --release --example generate_fixtures -- [out_dir]`

use std::path::PathBuf;

use shellsep::io::write_cloud;
use shellsep::synthetic::{generate_double_sphere, generate_sharp_corner_box, DoubleSphereSpec};

fn main() -> shellsep::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir).map_err(|e| shellsep::Error::InvalidInput(e.to_string()))?;
    let fixtures = [
        (
            "closed_sphere.ply",
            generate_double_sphere(&DoubleSphereSpec::closed(20_000, 20_000, 0))?,
        ),
        (
            "open_sphere.ply",
            generate_double_sphere(&DoubleSphereSpec::open_default(20_000, 20_000, 0))?,
        ),
        ("corner_box.ply", generate_sharp_corner_box(2.0, 0.2, 20_000, 0)?),
    ];
    for (name, cloud) in &fixtures {
        let path = dir.join(name);
        write_cloud(cloud, None, &path)?;
        println!(
            "{}: {} inter + {} outer, r0 = {:.5}",
            path.display(),
            cloud.n_inter(),
            cloud.n_outer(),
            cloud.r0()
        );
    }
    Ok(())
}
