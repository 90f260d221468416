//! Radius, nearest-neighbour and swept-sphere queries on a random cloud.

use shellsep::collision::{sweep_collide, CollisionQuery};
use shellsep::{PointCloud, SpatialIndex, Vec3};

fn main() -> shellsep::Result<()> {
    let points: Vec<Vec3> = (0..1000)
        .map(|i| {
            let t = i as f64 * 0.618_033_988_75;
            Vec3::new(t.fract(), (t * 7.0).fract(), (t * 13.0).fract())
        })
        .collect();
    let index = SpatialIndex::build(&points)?;
    let cloud = PointCloud::unlabeled(points)?;
    println!("r0 = {:.5}", cloud.r0());

    let c = Vec3::new(0.5, 0.5, 0.5);
    println!("within 0.1 of the centre: {}", index.radius_query(c, 0.1).len());
    if let Some((i, d)) = index.nearest(c) {
        println!("nearest to the centre: #{i} at {d:.4}");
    }

    let query = CollisionQuery::new(Vec3::new(-0.5, 0.5, 0.5), Vec3::new(1.0, 0.0, 0.0), 2.0, 0.02)?;
    match sweep_collide(&query, &cloud, &index) {
        Some(hit) => println!("sweep hits #{} after {:.4}", hit.point_index, hit.t),
        None => println!("sweep hits nothing"),
    }
    Ok(())
}
