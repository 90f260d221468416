//! Collision bookkeeping and the evaluation metrics built on it.

mod fit;

pub use fit::{fit_saturation, saturation_model, SaturationFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Label, PointCloud};

const UNVISITED: u32 = u32::MAX;

/// Unique/new/duplicate counts of one ball against the history before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BallCounts {
    pub collide: usize,
    pub new: usize,
    pub dup: usize,
}

impl BallCounts {
    pub fn duplication_rate(&self) -> Option<f64> {
        (self.collide > 0).then(|| self.dup as f64 / self.collide as f64)
    }
}

/// Per-ball collided indices plus the global visited set.
///
/// The visited set stores, for every point, the ball that first hit it, which
/// lets `Dup(i)` be evaluated against the history before ball `i` at any time.
#[derive(Debug, Clone)]
pub struct CollisionLog {
    per_ball: Vec<Vec<u32>>,
    escaped: Vec<bool>,
    first_visit: Vec<u32>,
    visited_count: usize,
}

impl CollisionLog {
    pub fn new(n_points: usize) -> Self {
        CollisionLog {
            per_ball: Vec::new(),
            escaped: Vec::new(),
            first_visit: vec![UNVISITED; n_points],
            visited_count: 0,
        }
    }

    /// Append the next ball's raw hit sequence (a multiset) and escape flag.
    pub fn record_ball(&mut self, hits: Vec<u32>, escaped: bool) -> BallCounts {
        let ball = self.per_ball.len() as u32;
        let mut uniq = hits.clone();
        uniq.sort_unstable();
        uniq.dedup();
        let mut counts = BallCounts {
            collide: uniq.len(),
            ..Default::default()
        };
        for &p in &uniq {
            let slot = &mut self.first_visit[p as usize];
            if *slot == UNVISITED {
                *slot = ball;
                self.visited_count += 1;
                counts.new += 1;
            } else {
                counts.dup += 1;
            }
        }
        self.per_ball.push(hits);
        self.escaped.push(escaped);
        counts
    }

    pub fn balls(&self) -> usize {
        self.per_ball.len()
    }

    /// Raw hit sequence of ball `i` (0-based).
    pub fn hits(&self, i: usize) -> &[u32] {
        &self.per_ball[i]
    }

    pub fn escaped(&self, i: usize) -> bool {
        self.escaped[i]
    }

    pub fn n_escape(&self) -> usize {
        self.escaped.iter().filter(|&&e| e).count()
    }

    pub fn is_visited(&self, p: usize) -> bool {
        self.first_visit[p] != UNVISITED
    }

    pub fn visited_count(&self) -> usize {
        self.visited_count
    }

    /// Ball that first hit point `p`.
    pub fn first_visit(&self, p: usize) -> Option<usize> {
        let b = self.first_visit[p];
        (b != UNVISITED).then_some(b as usize)
    }

    /// Sorted indices of every visited point.
    pub fn visited(&self) -> Vec<usize> {
        (0..self.first_visit.len()).filter(|&p| self.is_visited(p)).collect()
    }

    /// Counts for ball `i` against the visited set before it.
    pub fn ball_counts(&self, i: usize) -> BallCounts {
        let mut uniq = self.per_ball[i].clone();
        uniq.sort_unstable();
        uniq.dedup();
        let dup = uniq
            .iter()
            .filter(|&&p| (self.first_visit[p as usize] as usize) < i)
            .count();
        BallCounts {
            collide: uniq.len(),
            new: uniq.len() - dup,
            dup,
        }
    }
}

/// `|Dup(i)| / |Collide(i)|` for ball `i`, or `None` when it hit nothing.
pub fn duplication_rate(log: &CollisionLog, i: usize) -> Option<f64> {
    log.ball_counts(i).duplication_rate()
}

/// Fractions of inter- and outer-labelled points in the visited set.
pub fn detection_rates(log: &CollisionLog, cloud: &PointCloud) -> Result<(f64, f64)> {
    let labels = cloud
        .labels()
        .ok_or_else(|| Error::invalid("detection rates need a labelled cloud"))?;
    let detected: Vec<usize> = log.visited();
    Ok(rates_for(&detected, labels))
}

/// `(C_inter / N_inter, C_outer / N_outer)` for an arbitrary detected index set.
/// A rate whose denominator is zero is reported as 0.
pub fn rates_for(detected: &[usize], labels: &[Label]) -> (f64, f64) {
    let (mut ci, mut co) = (0usize, 0usize);
    for &p in detected {
        match labels[p] {
            Label::Inter => ci += 1,
            Label::Outer => co += 1,
            Label::Unknown => {}
        }
    }
    let ni = labels.iter().filter(|&&l| l == Label::Inter).count();
    let no = labels.iter().filter(|&&l| l == Label::Outer).count();
    (ratio(ci, ni), ratio(co, no))
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Non-watertight when more than `threshold` balls escaped.
pub fn classify_watertight(n_escape: usize, threshold: usize) -> bool {
    n_escape <= threshold
}

/// One row of the per-ball metric trace. `i` counts completed balls from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub i: u64,
    pub collide: u32,
    pub new: u32,
    pub dup: u32,
    pub r_dup: Option<f64>,
    pub c_inter: u64,
    pub c_outer: u64,
    pub r_inter: f64,
    pub r_outer: f64,
    pub n_escape: u64,
}

/// Incrementally built per-ball trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricTrace {
    pub records: Vec<TraceRecord>,
    n_inter: usize,
    n_outer: usize,
    c_inter: u64,
    c_outer: u64,
    n_escape: u64,
}

impl MetricTrace {
    pub fn new(cloud: &PointCloud) -> Self {
        MetricTrace {
            n_inter: cloud.n_inter(),
            n_outer: cloud.n_outer(),
            ..Default::default()
        }
    }

    /// Append the record for the ball just logged. `newly_visited` are the
    /// point indices that ball added to the visited set.
    pub fn push(
        &mut self,
        counts: BallCounts,
        newly_visited: impl IntoIterator<Item = Label>,
        escaped: bool,
    ) -> &TraceRecord {
        for l in newly_visited {
            match l {
                Label::Inter => self.c_inter += 1,
                Label::Outer => self.c_outer += 1,
                Label::Unknown => {}
            }
        }
        if escaped {
            self.n_escape += 1;
        }
        let rec = TraceRecord {
            i: self.records.len() as u64 + 1,
            collide: counts.collide as u32,
            new: counts.new as u32,
            dup: counts.dup as u32,
            r_dup: counts.duplication_rate(),
            c_inter: self.c_inter,
            c_outer: self.c_outer,
            r_inter: ratio(self.c_inter as usize, self.n_inter),
            r_outer: ratio(self.c_outer as usize, self.n_outer),
            n_escape: self.n_escape,
        };
        self.records.push(rec);
        self.records.last().expect("just pushed")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// `(i, r_inter)` samples for fitting.
    pub fn r_inter_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.i as f64, r.r_inter)).collect()
    }

    pub fn r_outer_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.i as f64, r.r_outer)).collect()
    }
}
