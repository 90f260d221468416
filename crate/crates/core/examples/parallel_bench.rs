//! Serial and parallel throughput on the closed double sphere.
//!
//! `cargo run --release --example parallel_bench -- [balls] [workers...]`

use shellsep::parallel::{bench_serial, benchmark_on_domain, ParallelConfig};
use shellsep::sim::Domain;
use shellsep::synthetic::{generate_double_sphere, DoubleSphereSpec};
use shellsep::SimConfig;

fn main() -> shellsep::Result<()> {
    let mut args = std::env::args().skip(1);
    let balls: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let mut workers: Vec<usize> = args.filter_map(|a| a.parse().ok()).collect();
    if workers.is_empty() {
        workers = vec![1, 2, 4, 8];
    }
    let cloud = generate_double_sphere(&DoubleSphereSpec::closed(20_000, 20_000, 0))?;
    let sim = SimConfig {
        max_balls: balls,
        dup_streak: u32::MAX,
        ..SimConfig::default()
    };
    let domain = Domain::new(cloud, sim.escape_margin_factor)?;
    let config = ParallelConfig {
        sim: sim.clone(),
        ..ParallelConfig::default()
    };

    let mut reports = vec![bench_serial(&domain, &sim)?];
    reports.extend(benchmark_on_domain(&domain, &workers, &config)?);
    println!(
        "{:<10} {:>7} {:>9} {:>12} {:>8}",
        "impl", "workers", "time_s", "balls/s", "R_inter"
    );
    for r in &reports {
        println!(
            "{:<10} {:>7} {:>9.2} {:>12.0} {:>8.4}",
            r.implementation, r.workers, r.elapsed_seconds, r.balls_per_second, r.r_inter
        );
    }
    Ok(())
}
