//! Static KD-tree over a point set.
//!
//! Points are copied into tree order at build time; every query reports
//! original input indices.

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Vec3};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    kind: NodeKind,
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf { start: u32, end: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn build(points: &[Vec3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("cannot index an empty point set"));
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::invalid("point set too large to index"));
        }
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build_node(points, &mut order, 0, &mut nodes);
        let tree_points = order.iter().map(|&i| points[i as usize]).collect();
        Ok(SpatialIndex {
            points: tree_points,
            ids: order,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices `i` with `|points[i] - center| <= radius`, ascending.
    pub fn radius_query(&self, center: Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let r2 = radius * radius;
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if box_distance_squared(node.lo, node.hi, center) > r2 {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for k in start as usize..end as usize {
                        if self.points[k].distance_squared(center) <= r2 {
                            out.push(self.ids[k] as usize);
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest point to `query`, optionally skipping one index (for self-exclusion).
    /// Ties resolve to the smallest index.
    pub fn nearest_excluding(&self, query: Vec3, exclude: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None; // (index, squared distance)
        let mut stack = vec![(0u32, 0.0f64)];
        while let Some((n, bound)) = stack.pop() {
            if let Some((_, bd)) = best {
                if bound > bd {
                    continue;
                }
            }
            let node = &self.nodes[n as usize];
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for k in start as usize..end as usize {
                        let id = self.ids[k] as usize;
                        if Some(id) == exclude {
                            continue;
                        }
                        let d = self.points[k].distance_squared(query);
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d < bd || (d == bd && id < bi),
                        };
                        if better {
                            best = Some((id, d));
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.node_distance_squared(left, query);
                    let dr = self.node_distance_squared(right, query);
                    // push far child first so the near one is popped next
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        best.map(|(i, d)| (i, d.sqrt()))
    }

    pub fn nearest(&self, query: Vec3) -> Option<(usize, f64)> {
        self.nearest_excluding(query, None)
    }

    /// Smallest value of `contact(point, index)` over all points that can lie within
    /// `inflate` of the segment `origin + t * dir`, `t` in `[0, t_max]`.
    ///
    /// Nodes whose box, grown by `inflate`, is not entered by the ray before the
    /// current best time are skipped. `contact` must only return times for points
    /// that are within `inflate` of the ray position at that time. Ties are broken
    /// by the smaller original index.
    pub fn sweep_min<F>(
        &self,
        origin: Vec3,
        dir: Vec3,
        inflate: f64,
        t_max: f64,
        mut contact: F,
    ) -> Option<(usize, f64)>
    where
        F: FnMut(Vec3) -> Option<f64>,
    {
        let mut best: Option<(usize, f64)> = None;
        let mut best_t = t_max;
        let grow = Vec3::new(inflate, inflate, inflate);
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        if let Some(t0) = slab_entry(origin, dir, self.nodes[0].lo - grow, self.nodes[0].hi + grow, best_t) {
            stack.push((0, t0));
        }
        while let Some((n, entry)) = stack.pop() {
            if entry > best_t {
                continue;
            }
            let node = &self.nodes[n as usize];
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for k in start as usize..end as usize {
                        if let Some(t) = contact(self.points[k]) {
                            let id = self.ids[k] as usize;
                            let better = match best {
                                None => t <= best_t,
                                Some((bi, _)) => t < best_t || (t == best_t && id < bi),
                            };
                            if better {
                                best = Some((id, t));
                                best_t = t;
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let a = &self.nodes[left as usize];
                    let b = &self.nodes[right as usize];
                    let ea = slab_entry(origin, dir, a.lo - grow, a.hi + grow, best_t);
                    let eb = slab_entry(origin, dir, b.lo - grow, b.hi + grow, best_t);
                    match (ea, eb) {
                        (Some(ta), Some(tb)) => {
                            if ta <= tb {
                                stack.push((right, tb));
                                stack.push((left, ta));
                            } else {
                                stack.push((left, ta));
                                stack.push((right, tb));
                            }
                        }
                        (Some(ta), None) => stack.push((left, ta)),
                        (None, Some(tb)) => stack.push((right, tb)),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }

    fn node_distance_squared(&self, n: u32, q: Vec3) -> f64 {
        let node = &self.nodes[n as usize];
        box_distance_squared(node.lo, node.hi, q)
    }
}

fn build_node(points: &[Vec3], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let (lo, hi) = bounding_box_of(points, order);
    let id = nodes.len() as u32;
    nodes.push(Node {
        lo,
        hi,
        kind: NodeKind::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        },
    });
    if order.len() <= LEAF_SIZE {
        return id;
    }
    let ext = hi - lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis].total_cmp(&points[b as usize][axis])
    });
    let (l, r) = order.split_at_mut(mid);
    let left = build_node(points, l, offset, nodes);
    let right = build_node(points, r, offset + mid, nodes);
    nodes[id as usize].kind = NodeKind::Inner { left, right };
    id
}

fn bounding_box_of(points: &[Vec3], order: &[u32]) -> (Vec3, Vec3) {
    let sel: Vec<Vec3> = order.iter().map(|&i| points[i as usize]).collect();
    bounding_box(&sel)
}

#[inline]
fn box_distance_squared(lo: Vec3, hi: Vec3, q: Vec3) -> f64 {
    let dx = (lo.x - q.x).max(0.0).max(q.x - hi.x);
    let dy = (lo.y - q.y).max(0.0).max(q.y - hi.y);
    let dz = (lo.z - q.z).max(0.0).max(q.z - hi.z);
    dx * dx + dy * dy + dz * dz
}

/// Entry time of the ray into the box, clipped to `[0, t_max]`; `None` if missed.
#[inline]
fn slab_entry(o: Vec3, d: Vec3, lo: Vec3, hi: Vec3, t_max: f64) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = t_max;
    for axis in 0..3 {
        let (oa, da, la, ha) = (o[axis], d[axis], lo[axis], hi[axis]);
        if da == 0.0 {
            if oa < la || oa > ha {
                return None;
            }
            continue;
        }
        let inv = 1.0 / da;
        let (mut a, mut b) = ((la - oa) * inv, (ha - oa) * inv);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some(t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    fn brute_radius(points: &[Vec3], c: Vec3, r: f64) -> Vec<usize> {
        (0..points.len()).filter(|&i| points[i].distance(c) <= r).collect()
    }

    #[test]
    fn single_point_self_hit() {
        let idx = SpatialIndex::build(&[Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(idx.radius_query(Vec3::new(1.0, 2.0, 3.0), 0.0), vec![0]);
    }

    #[test]
    fn empty_rejected() {
        assert!(SpatialIndex::build(&[]).is_err());
    }

    #[test]
    fn radius_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 100);
        let idx = SpatialIndex::build(&pts).unwrap();
        for _ in 0..50 {
            let c = Vec3::new(rng.random(), rng.random(), rng.random());
            let r = rng.random::<f64>() * 0.5;
            assert_eq!(idx.radius_query(c, r), brute_radius(&pts, c, r));
        }
    }

    #[test]
    fn tiny_radius_off_cloud_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = random_points(&mut rng, 100);
        let idx = SpatialIndex::build(&pts).unwrap();
        assert!(idx.radius_query(Vec3::new(5.0, 5.0, 5.0), 1e-6).is_empty());
    }

    #[test]
    fn nearest_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_points(&mut rng, 500);
        let idx = SpatialIndex::build(&pts).unwrap();
        for i in 0..pts.len() {
            let (j, d) = idx.nearest_excluding(pts[i], Some(i)).unwrap();
            let (bj, bd) = (0..pts.len())
                .filter(|&k| k != i)
                .map(|k| (k, pts[k].distance(pts[i])))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            assert_eq!(j, bj);
            assert_eq!(d, bd);
        }
    }

    #[test]
    fn duplicated_points_are_all_found() {
        let pts = vec![Vec3::ZERO; 20];
        let idx = SpatialIndex::build(&pts).unwrap();
        assert_eq!(idx.radius_query(Vec3::ZERO, 0.0).len(), 20);
        assert_eq!(idx.nearest_excluding(Vec3::ZERO, Some(0)), Some((1, 0.0)));
    }
}
