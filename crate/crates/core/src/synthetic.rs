//! Labelled ground-truth fixtures: double-layer spheres (closed or with
//! openings) and a double-walled box with sharp corners.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Label, PointCloud, Vec3};
use crate::rng::{stream, Purpose};
use crate::sim::random_direction;

/// Which shells a spherical-cap opening removes points from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleShells {
    Inner,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hole {
    pub direction: Vec3,
    pub angular_radius: f64,
    pub shells: HoleShells,
}

impl Hole {
    fn contains(&self, unit_dir: Vec3) -> bool {
        unit_dir.dot(self.direction) > self.angular_radius.cos()
    }
}

/// How points are placed on a sphere shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereSampling {
    /// Randomly rotated Fibonacci lattice with a small tangential jitter.
    /// Area-uniform, with no sampling gaps much wider than the point spacing.
    Even,
    /// Independent uniform draws (normalised Gaussian vectors).
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSphereSpec {
    pub center: Vec3,
    pub sampling: SphereSampling,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub n_inner: usize,
    pub n_outer: usize,
    pub holes: Vec<Hole>,
    pub seed: u64,
}

impl DoubleSphereSpec {
    /// Closed double sphere with the outer shell at 1.2 times the inner radius.
    pub fn closed(n_inner: usize, n_outer: usize, seed: u64) -> Self {
        DoubleSphereSpec {
            center: Vec3::ZERO,
            sampling: SphereSampling::Even,
            inner_radius: 1.0,
            outer_radius: 1.2,
            n_inner,
            n_outer,
            holes: Vec::new(),
            seed,
        }
    }

    /// Closed sphere plus `n_holes` openings of `angular_radius` at random
    /// directions drawn from the seed.
    pub fn open(n_inner: usize, n_outer: usize, n_holes: usize, angular_radius: f64, seed: u64) -> Self {
        let mut rng = stream(seed, 1, Purpose::Generator);
        let holes = (0..n_holes)
            .map(|_| Hole {
                direction: random_direction(&mut rng),
                angular_radius,
                shells: HoleShells::Both,
            })
            .collect();
        DoubleSphereSpec {
            holes,
            ..Self::closed(n_inner, n_outer, seed)
        }
    }

    /// The default open-boundary fixture: three 0.25 rad openings.
    pub fn open_default(n_inner: usize, n_outer: usize, seed: u64) -> Self {
        Self::open(n_inner, n_outer, 3, 0.25, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius > 0.0 && self.inner_radius < self.outer_radius) || !self.outer_radius.is_finite() {
            return Err(Error::invalid(format!(
                "radii must satisfy 0 < inner < outer, got {} and {}",
                self.inner_radius, self.outer_radius
            )));
        }
        if self.n_inner < 1 || self.n_outer < 1 {
            return Err(Error::invalid("point counts must be at least 1"));
        }
        for h in &self.holes {
            if !(h.angular_radius > 0.0 && h.angular_radius < std::f64::consts::FRAC_PI_2) {
                return Err(Error::invalid("hole angular radius must lie in (0, pi/2)"));
            }
            if (h.direction.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("hole direction must be a unit vector"));
            }
        }
        Ok(())
    }
}

/// Uniform samples on both shells; points inside any opening of their shell
/// are dropped. Inner points are labelled `Inter`, outer points `Outer`.
pub fn generate_double_sphere(spec: &DoubleSphereSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = stream(spec.seed, 0, Purpose::Generator);
    let mut points = Vec::with_capacity(spec.n_inner + spec.n_outer);
    let mut labels = Vec::with_capacity(spec.n_inner + spec.n_outer);
    for (n, radius, label) in [
        (spec.n_inner, spec.inner_radius, Label::Inter),
        (spec.n_outer, spec.outer_radius, Label::Outer),
    ] {
        let dirs = match spec.sampling {
            SphereSampling::Even => even_sphere_directions(n, &mut rng),
            SphereSampling::Uniform => (0..n).map(|_| random_direction(&mut rng)).collect(),
        };
        for d in dirs {
            let cut = spec
                .holes
                .iter()
                .any(|h| (label == Label::Inter || h.shells == HoleShells::Both) && h.contains(d));
            if !cut {
                points.push(spec.center + d * radius);
                labels.push(label);
            }
        }
    }
    PointCloud::new(points, Some(labels))
}

/// Tangential jitter as a fraction of the mean lattice spacing.
const LATTICE_JITTER: f64 = 0.25;

/// `n` unit vectors on a Fibonacci lattice, randomly rotated and jittered.
pub fn even_sphere_directions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let spacing = (4.0 * std::f64::consts::PI / n as f64).sqrt();
    let rot = random_rotation(rng);
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let rxy = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let d = rot(Vec3::new(rxy * phi.cos(), rxy * phi.sin(), z));
            let (u, v) = d.orthonormal_basis();
            // uniform in a tangent disk
            let rad = LATTICE_JITTER * spacing * rng.random::<f64>().sqrt();
            let ang = rng.random::<f64>() * std::f64::consts::TAU;
            (d + u * (rad * ang.cos()) + v * (rad * ang.sin()))
                .normalized()
                .unwrap_or(d)
        })
        .collect()
}

/// Uniformly random rotation from a normalised Gaussian quaternion.
fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> impl Fn(Vec3) -> Vec3 {
    use rand_distr::{Distribution, StandardNormal};
    let mut q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= n);
    let (w, axis) = (q[0], Vec3::new(q[1], q[2], q[3]));
    move |v: Vec3| {
        let t = axis.cross(v) * 2.0;
        v + t * w + axis.cross(t)
    }
}

/// Double-walled, axis-aligned box centred at the origin. The inner box has
/// side `edge`, the outer `edge + 2 * wall_gap`. Each shell holds `n_points`
/// points: its 8 corners followed by area-uniform samples on the faces.
pub fn generate_sharp_corner_box(edge: f64, wall_gap: f64, n_points: usize, seed: u64) -> Result<PointCloud> {
    if !(edge > 0.0 && wall_gap > 0.0) || !edge.is_finite() || !wall_gap.is_finite() {
        return Err(Error::invalid("edge and wall gap must be positive"));
    }
    if n_points < 8 {
        return Err(Error::invalid("each box shell needs at least its 8 corners"));
    }
    let mut rng = stream(seed, 0, Purpose::Generator);
    let mut points = Vec::with_capacity(2 * n_points);
    let mut labels = Vec::with_capacity(2 * n_points);
    for (half, label) in [(edge / 2.0, Label::Inter), (edge / 2.0 + wall_gap, Label::Outer)] {
        for c in 0..8 {
            let s = |bit: usize| if c >> bit & 1 == 1 { half } else { -half };
            points.push(Vec3::new(s(0), s(1), s(2)));
            labels.push(label);
        }
        for _ in 8..n_points {
            points.push(sample_box_face(&mut rng, half));
            labels.push(label);
        }
    }
    PointCloud::new(points, Some(labels))
}

fn sample_box_face<R: Rng + ?Sized>(rng: &mut R, half: f64) -> Vec3 {
    let face = rng.random_range(0..6usize);
    let axis = face / 2;
    let side = if face % 2 == 0 { -half } else { half };
    let u = rng.random_range(-half..=half);
    let v = rng.random_range(-half..=half);
    match axis {
        0 => Vec3::new(side, u, v),
        1 => Vec3::new(u, side, v),
        _ => Vec3::new(u, v, side),
    }
}

/// Distance from `p` to the nearest of the 12 edges of the cube `[-half, half]^3`.
pub fn distance_to_box_edges(p: Vec3, half: f64) -> f64 {
    let mut best = f64::INFINITY;
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let along = p[axis].clamp(-half, half) - p[axis];
        for sa in [-half, half] {
            for sb in [-half, half] {
                let da = p[a] - sa;
                let db = p[b] - sb;
                best = best.min((along * along + da * da + db * db).sqrt());
            }
        }
    }
    best
}
