//! Separate the closed double sphere and score the result against its labels.

use shellsep::metrics::fit_saturation;
use shellsep::synthetic::{generate_double_sphere, DoubleSphereSpec};
use shellsep::{run_simulation, SimConfig};

fn main() -> shellsep::Result<()> {
    let cloud = generate_double_sphere(&DoubleSphereSpec::closed(20_000, 20_000, 0))?;
    let config = SimConfig {
        max_balls: 200_000,
        dup_streak: u32::MAX,
        ..SimConfig::default()
    };
    let res = run_simulation(&cloud, &config)?;
    let last = res.trace.last().expect("ran at least one ball");
    println!(
        "balls: {}, escaped: {}, watertight: {}",
        res.balls_run, res.n_escape, res.watertight
    );
    println!("R_inter = {:.4}, R_outer = {:.5}", last.r_inter, last.r_outer);
    println!("generated spawn points: {}", res.spawn_points.len());

    let fit = fit_saturation(&res.trace.r_inter_series())?;
    println!("saturation: A0 = {:.4}, tau = {:.0}", fit.a0, fit.tau);

    // with the default duplication-streak stop the run ends much earlier
    let early = run_simulation(&cloud, &SimConfig::default())?;
    println!(
        "streak stop: {:?} after {} balls, R_inter = {:.4}",
        early.termination_reason,
        early.balls_run,
        early.trace.last().unwrap().r_inter
    );
    Ok(())
}
