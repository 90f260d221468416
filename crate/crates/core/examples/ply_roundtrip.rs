//! Write a labeled cloud and an inter-only subset, then read both back.

use shellsep::io::{read_cloud, write_cloud, CloudFile};
use shellsep::synthetic::{generate_double_sphere, DoubleSphereSpec};

fn main() -> shellsep::Result<()> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let cloud = generate_double_sphere(&DoubleSphereSpec::closed(2000, 2000, 0))?;

    let full = dir.path().join("full.ply");
    write_cloud(&cloud, None, &full)?;
    let back = read_cloud(&CloudFile::new(&full))?.cloud;
    let max_err = cloud
        .points()
        .iter()
        .zip(back.points())
        .map(|(a, b)| a.distance(*b))
        .fold(0.0, f64::max);
    println!(
        "{} points back, labels equal: {}, max error {max_err:e}",
        back.len(),
        back.labels() == cloud.labels()
    );

    let inter: Vec<usize> = (0..cloud.len())
        .filter(|&i| cloud.label(i) == shellsep::Label::Inter)
        .collect();
    let subset = dir.path().join("inter.ply");
    write_cloud(&cloud, Some(&inter), &subset)?;
    let sub = read_cloud(&CloudFile::new(&subset))?.cloud;
    println!("subset: {} points, {} inter", sub.len(), sub.n_inter());
    Ok(())
}
