//! The diffusion engine: ball lifecycle, spawn-pool management and global
//! termination.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::collision::{reflect, sweep_collide, CollisionHit, CollisionQuery};
use crate::error::{Error, Result};
use crate::geometry::{make_escape_boundary, EscapeBoundary, PointCloud, Vec3};
use crate::kdtree::SpatialIndex;
use crate::metrics::{classify_watertight, CollisionLog, MetricTrace};
use crate::rng::{stream, Purpose};

/// Tunable parameters. Length factors are relative to the cloud unit length
/// `r0` (mean nearest-neighbour distance) unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// `R_ball = r_ball_factor * r0`
    pub r_ball_factor: f64,
    /// `margin = collision_margin_factor * R_ball`, `R_eff = R_ball + margin`
    pub collision_margin_factor: f64,
    /// `L_max = l_max_factor * r0`
    pub l_max_factor: f64,
    /// Probability of spawning at a generated spawn point instead of the initial one.
    pub p_random_spawn: f64,
    pub max_steps_per_ball: u32,
    pub max_collisions_per_ball: u32,
    pub max_balls: u64,
    pub dup_threshold: f64,
    pub dup_streak: u32,
    pub max_spawn_points: usize,
    /// Minimum distance between generated spawn points, times `R_ball`.
    pub spawn_min_separation_factor: f64,
    pub probe_steps: u32,
    /// Candidates closer than this times `R_eff` to the cloud are rejected.
    pub spawn_nn_reject_factor: f64,
    pub escape_margin_factor: f64,
    /// Maximum reflection perturbation, radians.
    pub perturb_angle: f64,
    pub seed: u64,
    pub escape_watertight_threshold: u64,
    /// Initial spawn point; the bounding-box centre when unset.
    pub initial_spawn: Option<Vec3>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            r_ball_factor: 2.0,
            collision_margin_factor: 0.5,
            l_max_factor: 50.0,
            p_random_spawn: 0.999,
            max_steps_per_ball: 50,
            max_collisions_per_ball: 5,
            max_balls: 500_000,
            dup_threshold: 0.99,
            dup_streak: 10,
            max_spawn_points: 200,
            spawn_min_separation_factor: 2.0,
            probe_steps: 10,
            spawn_nn_reject_factor: 1.0,
            escape_margin_factor: 1.2,
            perturb_angle: 15f64.to_radians(),
            seed: 0,
            escape_watertight_threshold: 5,
            initial_spawn: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_ball_factor", self.r_ball_factor),
            ("collision_margin_factor", self.collision_margin_factor),
            ("l_max_factor", self.l_max_factor),
            ("spawn_min_separation_factor", self.spawn_min_separation_factor),
            ("spawn_nn_reject_factor", self.spawn_nn_reject_factor),
            ("escape_margin_factor", self.escape_margin_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.escape_margin_factor < 1.0 {
            return Err(Error::invalid("escape_margin_factor must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.p_random_spawn) {
            return Err(Error::invalid("p_random_spawn must lie in [0, 1]"));
        }
        if !(self.dup_threshold > 0.0 && self.dup_threshold <= 1.0) {
            return Err(Error::invalid("dup_threshold must lie in (0, 1]"));
        }
        if !(self.perturb_angle >= 0.0) || self.perturb_angle >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("perturb_angle must lie in [0, pi/2)"));
        }
        let counts = [
            ("max_steps_per_ball", self.max_steps_per_ball as u64),
            ("max_collisions_per_ball", self.max_collisions_per_ball as u64),
            ("max_balls", self.max_balls),
            ("dup_streak", self.dup_streak as u64),
            ("max_spawn_points", self.max_spawn_points as u64),
            ("probe_steps", self.probe_steps as u64),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::invalid(format!("{name} must be >= 1")));
            }
        }
        if let Some(p) = self.initial_spawn {
            if !p.is_finite() {
                return Err(Error::invalid("initial_spawn must be finite"));
            }
        }
        Ok(())
    }

    /// Absolute lengths for a cloud with unit length `r0`.
    pub fn params(&self, r0: f64) -> SimParams {
        let r_ball = self.r_ball_factor * r0;
        let r_eff = r_ball * (1.0 + self.collision_margin_factor);
        SimParams {
            r0,
            r_ball,
            r_eff,
            l_max: self.l_max_factor * r0,
            spawn_min_separation: self.spawn_min_separation_factor * r_ball,
            spawn_nn_reject: self.spawn_nn_reject_factor * r_eff,
            perturb_angle: self.perturb_angle,
            max_steps: self.max_steps_per_ball,
            max_collisions: self.max_collisions_per_ball,
            probe_steps: self.probe_steps,
            p_random_spawn: self.p_random_spawn,
        }
    }
}

/// Absolute simulation quantities derived from a [`SimConfig`] and `r0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub r0: f64,
    pub r_ball: f64,
    pub r_eff: f64,
    pub l_max: f64,
    pub spawn_min_separation: f64,
    pub spawn_nn_reject: f64,
    pub perturb_angle: f64,
    pub max_steps: u32,
    pub max_collisions: u32,
    pub probe_steps: u32,
    pub p_random_spawn: f64,
}

/// Cloud, its index and the escape boundary, shared read-only by all balls.
#[derive(Debug, Clone)]
pub struct Domain {
    pub cloud: PointCloud,
    pub index: SpatialIndex,
    pub boundary: EscapeBoundary,
}

impl Domain {
    pub fn new(cloud: PointCloud, escape_margin_factor: f64) -> Result<Self> {
        let index = SpatialIndex::build(cloud.points())?;
        let boundary = make_escape_boundary(&cloud, escape_margin_factor)?;
        Ok(Domain { cloud, index, boundary })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallStatus {
    Active,
    Escaped,
    StepLimit,
    CollisionLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub index: usize,
    /// Ball centre at contact.
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallState {
    pub position: Vec3,
    pub direction: Vec3,
    pub steps_taken: u32,
    pub collisions: u32,
    /// `[older, newer]`
    pub last_two_contacts: [Option<Contact>; 2],
    pub status: BallStatus,
}

impl BallState {
    pub fn new(position: Vec3, direction: Vec3) -> Self {
        BallState {
            position,
            direction,
            steps_taken: 0,
            collisions: 0,
            last_two_contacts: [None, None],
            status: BallStatus::Active,
        }
    }

    fn push_contact(&mut self, c: Contact) {
        self.last_two_contacts = [self.last_two_contacts[1], Some(c)];
    }
}

/// Where balls start: the initial point and validated generated points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpawnPool {
    pub initial: Vec3,
    generated: Vec<Vec3>,
    capacity: usize,
}

impl SpawnPool {
    pub fn new(initial: Vec3, capacity: usize) -> Self {
        SpawnPool {
            initial,
            generated: Vec::new(),
            capacity,
        }
    }

    pub fn generated(&self) -> &[Vec3] {
        &self.generated
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.generated.len() >= self.capacity
    }

    pub fn too_close(&self, p: Vec3, min_separation: f64) -> bool {
        let m2 = min_separation * min_separation;
        self.generated.iter().any(|g| g.distance_squared(p) < m2)
    }

    /// Adds without validation (the engine runs [`validate_spawn`] first).
    /// Returns false when the pool is full.
    pub fn push(&mut self, p: Vec3) -> bool {
        if self.is_full() {
            return false;
        }
        self.generated.push(p);
        true
    }
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Some(d) = v.normalized() {
            return d;
        }
    }
}

/// A new active ball at a generated point (probability `p_random_spawn`, when
/// any exist) or the initial point, heading in a uniformly random direction.
pub fn spawn_ball<R: Rng + ?Sized>(pool: &SpawnPool, p_random_spawn: f64, rng: &mut R) -> BallState {
    let gen = pool.generated();
    let position = if !gen.is_empty() && rng.random::<f64>() < p_random_spawn {
        gen[rng.random_range(0..gen.len())]
    } else {
        pool.initial
    };
    BallState::new(position, random_direction(rng))
}

/// Result of one movement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Free,
    Collision(CollisionHit),
}

/// Advance an active ball by one step: free flight of `L_max` or travel to the
/// first contact and reflect. Terminal status is assigned afterwards, escape
/// taking precedence over the collision and step limits.
pub fn step_ball<R: Rng + ?Sized>(
    ball: &mut BallState,
    domain: &Domain,
    params: &SimParams,
    rng: &mut R,
) -> StepOutcome {
    debug_assert_eq!(ball.status, BallStatus::Active);
    let query = CollisionQuery {
        origin: ball.position,
        direction: ball.direction,
        max_dist: params.l_max,
        effective_radius: params.r_eff,
    };
    let outcome = match sweep_collide(&query, &domain.cloud, &domain.index) {
        None => {
            ball.position += ball.direction * params.l_max;
            StepOutcome::Free
        }
        Some(hit) => {
            let surface = domain.cloud.points()[hit.point_index];
            ball.position = hit.contact_position;
            ball.direction = reflect(ball.direction, hit.contact_position, surface, rng, params.perturb_angle)
                .unwrap_or(-ball.direction);
            ball.collisions += 1;
            ball.push_contact(Contact {
                index: hit.point_index,
                position: hit.contact_position,
            });
            StepOutcome::Collision(hit)
        }
    };
    ball.steps_taken += 1;
    if domain.boundary.is_outside(ball.position) {
        ball.status = BallStatus::Escaped;
    } else if ball.collisions >= params.max_collisions {
        ball.status = BallStatus::CollisionLimit;
    } else if ball.steps_taken >= params.max_steps {
        ball.status = BallStatus::StepLimit;
    }
    outcome
}

/// Midpoint of the two most recent contact positions.
pub fn propose_spawn(ball: &BallState) -> Option<Vec3> {
    match ball.last_two_contacts {
        [Some(a), Some(b)] => Some(a.position.midpoint(b.position)),
        _ => None,
    }
}

/// Whether `candidate` may join the pool. Checks run cheapest first:
/// capacity, proximity to existing spawn points, distance to the cloud, and
/// finally a short probe walk that must not escape.
pub fn validate_spawn<R: Rng + ?Sized>(
    candidate: Vec3,
    pool: &SpawnPool,
    domain: &Domain,
    params: &SimParams,
    rng: &mut R,
) -> bool {
    if pool.is_full() || pool.too_close(candidate, params.spawn_min_separation) {
        return false;
    }
    if domain.boundary.is_outside(candidate) {
        return false;
    }
    match domain.index.nearest(candidate) {
        Some((_, d)) if d < params.spawn_nn_reject => return false,
        _ => {}
    }
    !probe_escapes(candidate, domain, params, rng)
}

/// Short walk from `start` with the normal kinematics; only the step budget
/// (`probe_steps`) bounds it.
fn probe_escapes<R: Rng + ?Sized>(start: Vec3, domain: &Domain, params: &SimParams, rng: &mut R) -> bool {
    let probe = SimParams {
        max_steps: params.probe_steps,
        max_collisions: u32::MAX,
        ..*params
    };
    let mut ball = BallState::new(start, random_direction(rng));
    while ball.status == BallStatus::Active {
        step_ball(&mut ball, domain, &probe, rng);
    }
    ball.status == BallStatus::Escaped
}

/// Everything a worker reports about one finished ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRecord {
    pub ball: u64,
    pub hits: Vec<u32>,
    pub status: BallStatus,
    pub steps: u32,
    pub proposals: Vec<Vec3>,
}

/// Run ball `k` to completion against a pool snapshot.
pub fn run_ball(k: u64, pool: &SpawnPool, domain: &Domain, params: &SimParams, seed: u64) -> BallRecord {
    let mut rng = stream(seed, k, Purpose::Ball);
    let mut ball = spawn_ball(pool, params.p_random_spawn, &mut rng);
    let mut hits = Vec::with_capacity(params.max_collisions.min(64) as usize);
    let mut proposals = Vec::new();
    while ball.status == BallStatus::Active {
        if let StepOutcome::Collision(hit) = step_ball(&mut ball, domain, params, &mut rng) {
            hits.push(hit.point_index as u32);
            if let Some(p) = propose_spawn(&ball) {
                proposals.push(p);
            }
        }
    }
    BallRecord {
        ball: k,
        hits,
        status: ball.status,
        steps: ball.steps_taken,
        proposals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    MaxBalls,
    DupStreak,
}

#[derive(Debug, Clone)]
pub struct SeparationResult {
    /// Sorted indices of every point hit by any ball.
    pub inter_indices: Vec<usize>,
    pub n_escape: u64,
    pub n_nescap: u64,
    pub watertight: bool,
    pub trace: MetricTrace,
    pub balls_run: u64,
    pub termination_reason: TerminationReason,
    pub spawn_points: Vec<Vec3>,
    pub log: CollisionLog,
    pub params: SimParams,
    pub boundary: EscapeBoundary,
}

/// Single-writer owner of the log, trace, pool and termination streak.
/// Finished balls must be merged in ball-index order.
pub(crate) struct Coordinator<'a> {
    domain: &'a Domain,
    params: SimParams,
    config: &'a SimConfig,
    pub(crate) pool: SpawnPool,
    log: CollisionLog,
    trace: MetricTrace,
    streak: u32,
    n_escape: u64,
}

impl<'a> Coordinator<'a> {
    pub(crate) fn new(domain: &'a Domain, config: &'a SimConfig) -> Result<Self> {
        config.validate()?;
        let cloud = &domain.cloud;
        let initial = config.initial_spawn.unwrap_or_else(|| cloud.bbox_center());
        if initial.distance(domain.boundary.center) >= domain.boundary.radius {
            return Err(Error::invalid(format!(
                "initial spawn point ({}, {}, {}) is not inside the escape boundary",
                initial.x, initial.y, initial.z
            )));
        }
        Ok(Coordinator {
            domain,
            params: config.params(cloud.r0()),
            config,
            pool: SpawnPool::new(initial, config.max_spawn_points),
            log: CollisionLog::new(cloud.len()),
            trace: MetricTrace::new(cloud),
            streak: 0,
            n_escape: 0,
        })
    }

    pub(crate) fn params(&self) -> &SimParams {
        &self.params
    }

    pub(crate) fn balls_run(&self) -> u64 {
        self.log.balls() as u64
    }

    /// Merge the next ball; returns the termination reason if the run is over.
    pub(crate) fn merge(&mut self, record: BallRecord) -> Option<TerminationReason> {
        debug_assert_eq!(record.ball, self.balls_run());
        let escaped = record.status == BallStatus::Escaped;
        if escaped {
            self.n_escape += 1;
        }
        let counts = self.log.record_ball(record.hits, escaped);
        let i = self.log.balls() - 1;
        let cloud = &self.domain.cloud;
        let log = &self.log;
        let mut fresh: Vec<u32> = log
            .hits(i)
            .iter()
            .copied()
            .filter(|&p| log.first_visit(p as usize) == Some(i))
            .collect();
        fresh.sort_unstable();
        fresh.dedup();
        self.trace
            .push(counts, fresh.iter().map(|&p| cloud.label(p as usize)), escaped);

        if !record.proposals.is_empty() && !self.pool.is_full() {
            let mut rng = stream(self.config.seed, record.ball, Purpose::SpawnValidation);
            for p in record.proposals {
                if validate_spawn(p, &self.pool, self.domain, &self.params, &mut rng) {
                    self.pool.push(p);
                }
            }
        }

        if let Some(r) = counts.duplication_rate() {
            if r >= self.config.dup_threshold {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        if self.streak >= self.config.dup_streak {
            Some(TerminationReason::DupStreak)
        } else if self.balls_run() >= self.config.max_balls {
            Some(TerminationReason::MaxBalls)
        } else {
            None
        }
    }

    pub(crate) fn finish(self, reason: TerminationReason) -> SeparationResult {
        let balls_run = self.balls_run();
        SeparationResult {
            inter_indices: self.log.visited(),
            n_escape: self.n_escape,
            n_nescap: balls_run - self.n_escape,
            watertight: classify_watertight(self.n_escape as usize, self.config.escape_watertight_threshold as usize),
            trace: self.trace,
            balls_run,
            termination_reason: reason,
            spawn_points: self.pool.generated().to_vec(),
            log: self.log,
            params: self.params,
            boundary: self.domain.boundary,
        }
    }
}

/// Serial run over an owned cloud.
pub fn run_simulation(cloud: &PointCloud, config: &SimConfig) -> Result<SeparationResult> {
    config.validate()?;
    let domain = Domain::new(cloud.clone(), config.escape_margin_factor)?;
    run_on_domain(&domain, config)
}

/// Serial run over a prepared domain.
pub fn run_on_domain(domain: &Domain, config: &SimConfig) -> Result<SeparationResult> {
    let mut coord = Coordinator::new(domain, config)?;
    loop {
        let k = coord.balls_run();
        let record = run_ball(k, &coord.pool, domain, coord.params(), config.seed);
        if let Some(reason) = coord.merge(record) {
            return Ok(coord.finish(reason));
        }
    }
}
