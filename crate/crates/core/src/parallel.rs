//! Multi-worker execution of simulation balls.
//!
//! One coordinator owns the collision log and spawn pool. Workers receive
//! ranges of ball indices together with a snapshot of the pool taken at the
//! start of the round, run those balls against the shared read-only domain,
//! and send the finished records back. The coordinator merges records in
//! ball-index order, validates spawn proposals, and checks termination.
//!
//! With one worker and a batch size of one this is exactly the serial engine.

use std::sync::{mpsc, Arc};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::sim::{run_ball, run_on_domain, BallRecord, Coordinator, Domain, SeparationResult, SimConfig, SpawnPool};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelConfig {
    pub workers: usize,
    /// Balls per worker per round.
    pub batch_size: usize,
    pub sim: SimConfig,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        ParallelConfig {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            batch_size: 64,
            sim: SimConfig::default(),
        }
    }
}

impl ParallelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers < 1 || self.batch_size < 1 {
            return Err(Error::invalid("workers and batch_size must be >= 1"));
        }
        self.sim.validate()
    }
}

struct Job {
    first: u64,
    count: u64,
    pool: Arc<SpawnPool>,
}

pub fn run_parallel(cloud: &PointCloud, config: &ParallelConfig) -> Result<SeparationResult> {
    config.validate()?;
    let domain = Domain::new(cloud.clone(), config.sim.escape_margin_factor)?;
    run_parallel_on_domain(&domain, config)
}

pub fn run_parallel_on_domain(domain: &Domain, config: &ParallelConfig) -> Result<SeparationResult> {
    config.validate()?;
    let sim = &config.sim;
    let mut coord = Coordinator::new(domain, sim)?;
    let params = *coord.params();
    let seed = sim.seed;

    std::thread::scope(|scope| {
        let (done_tx, done_rx) = mpsc::channel::<Vec<BallRecord>>();
        let mut job_txs = Vec::with_capacity(config.workers);
        for _ in 0..config.workers {
            let (tx, rx) = mpsc::channel::<Job>();
            job_txs.push(tx);
            let done_tx = done_tx.clone();
            scope.spawn(move || {
                for job in rx {
                    let records = (job.first..job.first + job.count)
                        .map(|k| run_ball(k, &job.pool, domain, &params, seed))
                        .collect();
                    if done_tx.send(records).is_err() {
                        break;
                    }
                }
            });
        }
        drop(done_tx);

        loop {
            let start = coord.balls_run();
            let remaining = sim.max_balls - start;
            let pool = Arc::new(coord.pool.clone());
            let mut sent = 0;
            for (w, tx) in job_txs.iter().enumerate() {
                let first = start + (w * config.batch_size) as u64;
                let count = (config.batch_size as u64).min(remaining.saturating_sub(first - start));
                if count == 0 {
                    break;
                }
                tx.send(Job {
                    first,
                    count,
                    pool: Arc::clone(&pool),
                })
                .expect("worker alive while coordinator runs");
                sent += 1;
            }
            let mut records: Vec<BallRecord> = Vec::new();
            for _ in 0..sent {
                records.extend(done_rx.recv().expect("worker result"));
            }
            records.sort_unstable_by_key(|r| r.ball);
            for record in records {
                if let Some(reason) = coord.merge(record) {
                    // dropping the senders stops the workers
                    drop(job_txs);
                    return Ok(coord.finish(reason));
                }
            }
        }
    })
}

/// One benchmark row: wall time and accuracy of a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub implementation: String,
    pub workers: usize,
    pub elapsed_seconds: f64,
    pub balls_run: u64,
    pub balls_per_second: f64,
    pub r_inter: f64,
    pub r_outer: f64,
    pub n_escape: u64,
}

impl BenchReport {
    fn from_run(implementation: &str, workers: usize, elapsed: f64, res: &SeparationResult) -> Self {
        let last = res.trace.last();
        BenchReport {
            implementation: implementation.to_string(),
            workers,
            elapsed_seconds: elapsed,
            balls_run: res.balls_run,
            balls_per_second: res.balls_run as f64 / elapsed.max(f64::MIN_POSITIVE),
            r_inter: last.map_or(0.0, |r| r.r_inter),
            r_outer: last.map_or(0.0, |r| r.r_outer),
            n_escape: res.n_escape,
        }
    }
}

/// Time the serial engine on a prepared domain.
pub fn bench_serial(domain: &Domain, sim: &SimConfig) -> Result<BenchReport> {
    let t = Instant::now();
    let res = run_on_domain(domain, sim)?;
    Ok(BenchReport::from_run("serial", 1, t.elapsed().as_secs_f64(), &res))
}

/// Run the parallel engine once per worker count with the same seed and
/// budget. Index and boundary construction are excluded from the timing.
pub fn benchmark(cloud: &PointCloud, worker_counts: &[usize], config: &ParallelConfig) -> Result<Vec<BenchReport>> {
    let domain = Domain::new(cloud.clone(), config.sim.escape_margin_factor)?;
    benchmark_on_domain(&domain, worker_counts, config)
}

pub fn benchmark_on_domain(
    domain: &Domain,
    worker_counts: &[usize],
    config: &ParallelConfig,
) -> Result<Vec<BenchReport>> {
    worker_counts
        .iter()
        .map(|&workers| {
            let cfg = ParallelConfig {
                workers,
                ..config.clone()
            };
            let t = Instant::now();
            let res = run_parallel_on_domain(domain, &cfg)?;
            Ok(BenchReport::from_run(
                "parallel",
                workers,
                t.elapsed().as_secs_f64(),
                &res,
            ))
        })
        .collect()
}
