//! 3D vectors, the point cloud container and derived geometric quantities.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kdtree::SpatialIndex;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn distance_squared(self, o: Vec3) -> f64 {
        (self - o).norm_squared()
    }

    /// Unit vector in the same direction, or `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 1e-300 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn midpoint(self, o: Vec3) -> Vec3 {
        (self + o) * 0.5
    }

    /// Two unit vectors completing `self` (assumed unit) to an orthonormal basis.
    pub fn orthonormal_basis(self) -> (Vec3, Vec3) {
        // Duff et al., branchless ONB
        let sign = 1f64.copysign(self.z);
        let a = -1.0 / (sign + self.z);
        let b = self.x * self.y * a;
        let u = Vec3::new(1.0 + sign * self.x * self.x * a, sign * b, -sign * self.x);
        let v = Vec3::new(b, sign + self.y * self.y * a, -self.y);
        (u, v)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;

    #[inline]
    fn index(&self, axis: usize) -> &f64 {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Ground-truth layer tag of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Inter,
    Outer,
    Unknown,
}

impl Label {
    /// Integer code used by the PLY `layer` property.
    pub fn code(self) -> u8 {
        match self {
            Label::Inter => 0,
            Label::Outer => 1,
            Label::Unknown => 255,
        }
    }

    pub fn from_code(code: i64) -> Label {
        match code {
            0 => Label::Inter,
            1 => Label::Outer,
            _ => Label::Unknown,
        }
    }
}

/// Immutable point cloud with optional labels and its cached unit length `r0`.
///
/// Point indices are the 0-based positions in input order and are stable for
/// the lifetime of the cloud.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Vec3>,
    labels: Option<Vec<Label>>,
    r0: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, labels: Option<Vec<Label>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::invalid(format!(
                    "label count {} does not match point count {}",
                    l.len(),
                    points.len()
                )));
            }
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        let r0 = estimate_unit_length(&points)?;
        if r0 <= 0.0 {
            return Err(Error::invalid(
                "unit length is zero; the cloud consists of coincident points",
            ));
        }
        Ok(PointCloud { points, labels, r0 })
    }

    pub fn unlabeled(points: Vec<Vec3>) -> Result<Self> {
        Self::new(points, None)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels.as_ref().map_or(Label::Unknown, |l| l[i])
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    /// Mean nearest-neighbour distance.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels
            .as_ref()
            .map_or(0, |l| l.iter().filter(|&&x| x == label).count())
    }

    pub fn n_inter(&self) -> usize {
        self.count_label(Label::Inter)
    }

    pub fn n_outer(&self) -> usize {
        self.count_label(Label::Outer)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        bounding_box(&self.points)
    }

    pub fn bbox_center(&self) -> Vec3 {
        let (lo, hi) = self.bounding_box();
        lo.midpoint(hi)
    }

    /// Sub-cloud of the given indices, keeping labels.
    pub fn subset(&self, indices: &[usize]) -> Result<PointCloud> {
        let pts = indices.iter().map(|&i| self.points[i]).collect();
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect());
        PointCloud::new(pts, labels)
    }
}

pub(crate) fn bounding_box(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for &p in points {
        lo = lo.min(p);
        hi = hi.max(p);
    }
    (lo, hi)
}

/// Mean over all points of the distance to the nearest *other* point.
pub fn estimate_unit_length(points: &[Vec3]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid(format!(
            "unit length needs at least 2 points, got {}",
            points.len()
        )));
    }
    let index = SpatialIndex::build(points)?;
    let sum: f64 = points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            index
                .nearest_excluding(p, Some(i))
                .map(|(_, d)| d)
                .expect("at least two points")
        })
        .sum();
    Ok(sum / points.len() as f64)
}

/// Sphere whose crossing terminates a ball as escaped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeBoundary {
    pub center: Vec3,
    pub radius: f64,
}

impl EscapeBoundary {
    #[inline]
    pub fn is_outside(&self, p: Vec3) -> bool {
        p.distance(self.center) > self.radius
    }
}

/// Boundary centred on the bounding-box centre, with radius
/// `margin_factor` times the farthest point distance.
pub fn make_escape_boundary(cloud: &PointCloud, margin_factor: f64) -> Result<EscapeBoundary> {
    if !(margin_factor >= 1.0) || !margin_factor.is_finite() {
        return Err(Error::invalid(format!(
            "escape margin factor must be >= 1, got {margin_factor}"
        )));
    }
    if cloud.is_empty() {
        return Err(Error::invalid("empty cloud"));
    }
    let center = cloud.bbox_center();
    let far = cloud.points().iter().map(|p| p.distance(center)).fold(0.0, f64::max);
    // degenerate single-location clouds still need a positive radius
    let far = if far > 0.0 { far } else { cloud.r0() };
    Ok(EscapeBoundary {
        center,
        radius: margin_factor * far,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_unit_length() {
        let pts = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(estimate_unit_length(&pts).unwrap(), 1.0);
    }

    #[test]
    fn unit_square_corners() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        assert_eq!(estimate_unit_length(&pts).unwrap(), 1.0);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            estimate_unit_length(&[Vec3::ZERO]),
            Err(Error::InvalidInput(_))
        ));
        assert!(PointCloud::unlabeled(vec![]).is_err());
    }

    #[test]
    fn label_length_mismatch() {
        let pts = vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)];
        assert!(PointCloud::new(pts, Some(vec![Label::Inter])).is_err());
    }

    #[test]
    fn coincident_cloud_rejected() {
        let pts = vec![Vec3::ZERO, Vec3::ZERO];
        assert!(PointCloud::unlabeled(pts).is_err());
    }

    #[test]
    fn cube_corner_boundary() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64));
        }
        let cloud = PointCloud::unlabeled(pts).unwrap();
        let b = make_escape_boundary(&cloud, 1.2).unwrap();
        assert_eq!(b.center, Vec3::new(0.5, 0.5, 0.5));
        assert!((b.radius - 1.2 * 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn margin_one_touches_farthest_point() {
        let pts = vec![
            Vec3::new(0.3, -1.0, 2.0),
            Vec3::new(4.0, 0.5, 1.0),
            Vec3::new(-2.0, 3.0, 0.0),
        ];
        let cloud = PointCloud::unlabeled(pts).unwrap();
        let b = make_escape_boundary(&cloud, 1.0).unwrap();
        let far = cloud.points().iter().map(|p| p.distance(b.center)).fold(0.0, f64::max);
        assert!((far - b.radius).abs() < 1e-12);
        assert!(make_escape_boundary(&cloud, 0.9).is_err());
    }

    #[test]
    fn onb_is_orthonormal() {
        for d in [
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::new(1.0, 2.0, -3.0).normalized().unwrap(),
        ] {
            let (u, v) = d.orthonormal_basis();
            assert!((u.norm() - 1.0).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(u.dot(v).abs() < 1e-12 && u.dot(d).abs() < 1e-12 && v.dot(d).abs() < 1e-12);
        }
    }
}
