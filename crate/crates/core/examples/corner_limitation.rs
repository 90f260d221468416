//! Sharp corners: the ball cannot reach inter points tucked into box edges.

use shellsep::geometry::Label;
use shellsep::synthetic::{distance_to_box_edges, generate_sharp_corner_box};
use shellsep::{run_simulation, SimConfig};

fn main() -> shellsep::Result<()> {
    let cloud = generate_sharp_corner_box(2.0, 0.2, 20_000, 0)?;
    let config = SimConfig {
        max_balls: 200_000,
        dup_streak: u32::MAX,
        ..SimConfig::default()
    };
    let res = run_simulation(&cloud, &config)?;
    let mut hit = vec![false; cloud.len()];
    for &i in &res.inter_indices {
        hit[i] = true;
    }
    let missed: Vec<f64> = (0..cloud.len())
        .filter(|&i| cloud.label(i) == Label::Inter && !hit[i])
        .map(|i| distance_to_box_edges(cloud.points()[i], 1.0) / res.params.r_ball)
        .collect();
    println!("missed {} of {} inter points", missed.len(), cloud.n_inter());
    for limit in [0.5, 1.0, 2.0] {
        let n = missed.iter().filter(|&&d| d <= limit).count();
        println!("  within {limit} R_ball of an edge: {n}");
    }
    Ok(())
}
