//! An open double sphere leaks balls through its openings and is classified
//! as not watertight.

use shellsep::synthetic::{generate_double_sphere, DoubleSphereSpec};
use shellsep::{run_simulation, SimConfig};

fn main() -> shellsep::Result<()> {
    let spec = DoubleSphereSpec::open(20_000, 20_000, 3, 0.25, 1);
    let cloud = generate_double_sphere(&spec)?;
    let config = SimConfig {
        r_ball_factor: 3.0,
        max_balls: 100_000,
        dup_streak: u32::MAX,
        ..SimConfig::default()
    };
    let res = run_simulation(&cloud, &config)?;
    let last = res.trace.last().unwrap();
    println!("{} holes, {} points", spec.holes.len(), cloud.len());
    println!(
        "escaped {} of {} balls, watertight: {}",
        res.n_escape, res.balls_run, res.watertight
    );
    println!("R_inter = {:.4}, R_outer = {:.4}", last.r_inter, last.r_outer);
    Ok(())
}
