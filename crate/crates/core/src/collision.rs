//! Swept-sphere collision of a moving ball against individual cloud points,
//! and reflection off the contact.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use crate::kdtree::SpatialIndex;

/// Travel distance, as a fraction of `R_eff`, registered for a ball that
/// starts overlapped with a point it is moving into.
pub const OVERLAP_T_FACTOR: f64 = 1e-6;

/// Discriminants above this (negative) value are clamped to zero.
const DISCRIMINANT_CLAMP: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionQuery {
    pub origin: Vec3,
    pub direction: Vec3,
    pub max_dist: f64,
    pub effective_radius: f64,
}

impl CollisionQuery {
    pub fn new(origin: Vec3, direction: Vec3, max_dist: f64, effective_radius: f64) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("collision direction must be a unit vector"));
        }
        if !(max_dist > 0.0) || !(effective_radius > 0.0) {
            return Err(Error::invalid("max distance and effective radius must be positive"));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("collision origin must be finite"));
        }
        Ok(CollisionQuery {
            origin,
            direction,
            max_dist,
            effective_radius,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionHit {
    pub point_index: usize,
    pub t: f64,
    pub contact_position: Vec3,
}

/// Travel distance at which a ball of radius `r_eff` moving from `origin`
/// along unit `dir` first touches `q`, if within `(0, max_dist]`.
///
/// Solves `t^2 - 2 t b + c = 0` with `b = dir·(q - origin)` and
/// `c = |q - origin|^2 - r_eff^2`. A ball moving away from `q` (b <= 0) never
/// touches it. A ball already overlapping `q` and moving into it is reported
/// at `OVERLAP_T_FACTOR * r_eff`.
#[inline]
pub fn contact_time(origin: Vec3, dir: Vec3, q: Vec3, r_eff: f64, max_dist: f64) -> Option<f64> {
    let rel = q - origin;
    let b = dir.dot(rel);
    if b <= 0.0 {
        return None;
    }
    let c = rel.norm_squared() - r_eff * r_eff;
    let mut disc = b * b - c;
    if disc < 0.0 {
        if disc < DISCRIMINANT_CLAMP {
            return None;
        }
        disc = 0.0;
    }
    if c <= 0.0 {
        return Some(OVERLAP_T_FACTOR * r_eff);
    }
    // c / (b + sqrt(disc)) == b - sqrt(disc) without cancellation
    let t = c / (b + disc.sqrt());
    (t <= max_dist).then_some(t)
}

/// First point hit by the swept ball within `max_dist`, if any.
///
/// Equivalent to testing every point returned by a radius query of
/// `max_dist + effective_radius` around the origin; the index traversal prunes
/// subtrees that cannot beat the current earliest contact.
pub fn sweep_collide(query: &CollisionQuery, cloud: &PointCloud, index: &SpatialIndex) -> Option<CollisionHit> {
    debug_assert_eq!(cloud.len(), index.len());
    let CollisionQuery {
        origin,
        direction,
        max_dist,
        effective_radius,
    } = *query;
    index
        .sweep_min(origin, direction, effective_radius, max_dist, |q| {
            contact_time(origin, direction, q, effective_radius, max_dist)
        })
        .map(|(point_index, t)| CollisionHit {
            point_index,
            t,
            contact_position: origin + direction * t,
        })
}

/// Specular reflection off the contact normal `normalize(contact - surface_point)`,
/// rotated by a uniformly random angle in `[0, max_perturb_angle]` about a random
/// axis orthogonal to the specular direction.
///
/// Perturbations that would point back into the surface are resampled up to 16
/// times, after which the unperturbed specular direction is returned.
pub fn reflect<R: Rng + ?Sized>(
    incoming: Vec3,
    contact: Vec3,
    surface_point: Vec3,
    rng: &mut R,
    max_perturb_angle: f64,
) -> Result<Vec3> {
    let offset = contact - surface_point;
    if offset.norm() < 1e-12 {
        return Err(Error::DegenerateNormal);
    }
    let n = offset / offset.norm();
    let spec = incoming - n * (2.0 * incoming.dot(n));
    let spec = spec.normalized().ok_or(Error::DegenerateNormal)?;
    if max_perturb_angle <= 0.0 {
        return Ok(spec);
    }
    let (u, v) = spec.orthonormal_basis();
    for _ in 0..16 {
        let angle = rng.random::<f64>() * max_perturb_angle;
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        let side = u * phi.cos() + v * phi.sin();
        let d = spec * angle.cos() + side * angle.sin();
        if let Some(d) = d.normalized() {
            if d.dot(n) > 0.0 {
                return Ok(d);
            }
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cloud_of(points: Vec<Vec3>) -> (PointCloud, SpatialIndex) {
        let idx = SpatialIndex::build(&points).unwrap();
        (PointCloud::unlabeled(points).unwrap(), idx)
    }

    #[test]
    fn collinear_hit() {
        let (cloud, idx) = cloud_of(vec![Vec3::new(5.0, 0.0, 0.0), Vec3::new(50.0, 50.0, 0.0)]);
        let q = CollisionQuery::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 10.0, 1.0).unwrap();
        let hit = sweep_collide(&q, &cloud, &idx).unwrap();
        assert_eq!(hit.point_index, 0);
        assert!((hit.t - 4.0).abs() < 1e-12);
        assert!(hit.contact_position.distance(Vec3::new(4.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn out_of_reach() {
        let (cloud, idx) = cloud_of(vec![Vec3::new(5.0, 0.0, 0.0), Vec3::new(50.0, 50.0, 0.0)]);
        let q = CollisionQuery::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 3.0, 1.0).unwrap();
        assert!(sweep_collide(&q, &cloud, &idx).is_none());
    }

    #[test]
    fn moving_away_from_overlap_is_free() {
        // ball starts in contact and leaves
        let t = contact_time(
            Vec3::ZERO,
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            1.0,
            5.0,
        );
        assert_eq!(t, None);
        // ball starts overlapped and pushes in
        let t = contact_time(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0), 1.0, 5.0);
        assert_eq!(t, Some(OVERLAP_T_FACTOR));
    }

    #[test]
    fn grazing_miss() {
        let t = contact_time(
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(3.0, 1.5, 0.0),
            1.0,
            10.0,
        );
        assert_eq!(t, None);
    }

    #[test]
    fn bad_query_rejected() {
        assert!(CollisionQuery::new(Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0), 1.0, 1.0).is_err());
        assert!(CollisionQuery::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 0.0, 1.0).is_err());
        assert!(CollisionQuery::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 1.0, -1.0).is_err());
    }

    #[test]
    fn head_on_reflection() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = reflect(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(4.0, 0.0, 0.0),
            Vec3::new(5.0, 0.0, 0.0),
            &mut rng,
            0.0,
        )
        .unwrap();
        assert!(d.distance(Vec3::new(-1.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn mirror_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = reflect(
            Vec3::new(h, -h, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
            &mut rng,
            0.0,
        )
        .unwrap();
        assert!(d.distance(Vec3::new(h, h, 0.0)) < 1e-12);
    }

    #[test]
    fn degenerate_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = Vec3::new(1.0, 1.0, 1.0);
        assert!(matches!(
            reflect(Vec3::new(1.0, 0.0, 0.0), p, p, &mut rng, 0.1),
            Err(Error::DegenerateNormal)
        ));
    }

    #[test]
    fn double_reflection_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d0 = Vec3::new(0.3, -0.8, 0.2).normalized().unwrap();
        let contact = Vec3::new(0.0, 1.0, 0.2);
        let surf = Vec3::new(0.1, 0.0, -0.3);
        let d1 = reflect(d0, contact, surf, &mut rng, 0.0).unwrap();
        let d2 = reflect(d1, contact, surf, &mut rng, 0.0).unwrap();
        assert!(d2.distance(d0) < 1e-9);
    }
}
