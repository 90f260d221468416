//! JSON run reports, trace CSV and benchmark CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::geometry::{Label, PointCloud};
use crate::metrics::{fit_saturation, rates_for, MetricTrace, SaturationFit};
use crate::parallel::BenchReport;
use crate::sim::{SeparationResult, SimConfig, TerminationReason};

/// Summary of one separation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SimConfig,
    pub workers: usize,
    pub r0: f64,
    pub n_t: usize,
    pub n_inter: usize,
    pub n_outer: usize,
    pub balls_run: u64,
    pub termination_reason: TerminationReason,
    pub n_escape: u64,
    pub n_nescap: u64,
    pub watertight: bool,
    pub n_detected: usize,
    pub r_inter: Option<f64>,
    pub r_outer: Option<f64>,
    pub fit: Option<SaturationFit>,
    pub elapsed_seconds: Option<f64>,
    pub inter_indices: Vec<usize>,
}

impl RunReport {
    /// Build a report. The saturation fit is attempted over the full
    /// `R_inter` trace when the cloud is labeled; a failed fit is left empty.
    pub fn new(
        cloud: &PointCloud,
        config: &SimConfig,
        workers: usize,
        result: &SeparationResult,
        elapsed_seconds: Option<f64>,
    ) -> Self {
        let (r_inter, r_outer, fit) = match cloud.labels() {
            Some(labels) => {
                let (ri, ro) = rates_for(&result.inter_indices, labels);
                (Some(ri), Some(ro), fit_saturation(&result.trace.r_inter_series()).ok())
            }
            None => (None, None, None),
        };
        RunReport {
            config: config.clone(),
            workers,
            r0: cloud.r0(),
            n_t: cloud.len(),
            n_inter: cloud.n_inter(),
            n_outer: cloud.n_outer(),
            balls_run: result.balls_run,
            termination_reason: result.termination_reason,
            n_escape: result.n_escape,
            n_nescap: result.n_nescap,
            watertight: result.watertight,
            n_detected: result.inter_indices.len(),
            r_inter,
            r_outer,
            fit,
            elapsed_seconds,
            inter_indices: result.inter_indices.clone(),
        }
    }
}

/// Detection rates and confusion counts of a detected set against labeled truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_detected: usize,
    pub n_inter: usize,
    pub n_outer: usize,
    pub detected_inter: usize,
    pub detected_outer: usize,
    pub detected_unknown: usize,
    pub missed_inter: usize,
    pub r_inter: f64,
    pub r_outer: f64,
}

impl EvaluationReport {
    /// `detected` holds indices into `truth`; duplicates are counted once.
    pub fn new(detected: &[usize], truth: &PointCloud) -> Result<Self> {
        let labels = truth
            .labels()
            .ok_or_else(|| Error::invalid("ground truth cloud carries no labels"))?;
        let mut det = detected.to_vec();
        det.sort_unstable();
        det.dedup();
        if let Some(&bad) = det.iter().find(|&&i| i >= labels.len()) {
            return Err(Error::invalid(format!(
                "detected index {bad} out of range for {} truth points",
                labels.len()
            )));
        }
        let count = |l: Label| det.iter().filter(|&&i| labels[i] == l).count();
        let (detected_inter, detected_outer) = (count(Label::Inter), count(Label::Outer));
        let (r_inter, r_outer) = rates_for(&det, labels);
        Ok(EvaluationReport {
            n_detected: det.len(),
            n_inter: truth.n_inter(),
            n_outer: truth.n_outer(),
            detected_inter,
            detected_outer,
            detected_unknown: det.len() - detected_inter - detected_outer,
            missed_inter: truth.n_inter() - detected_inter,
            r_inter,
            r_outer,
        })
    }
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Trace CSV. With `every > 1` only every `every`-th ball is kept, plus the last one.
pub fn write_trace_csv(trace: &MetricTrace, every: usize, path: &Path) -> Result<()> {
    let every = every.max(1) as u64;
    let mut w = csv::Writer::from_writer(Vec::new());
    let n = trace.len() as u64;
    let mut wrote_header = false;
    for r in &trace.records {
        if r.i % every == 0 || r.i == n {
            w.serialize(r)?;
            wrote_header = true;
        }
    }
    if !wrote_header {
        w.write_record(TRACE_COLUMNS)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

/// Trace CSV column names.
pub const TRACE_COLUMNS: [&str; 10] = [
    "i", "collide", "new", "dup", "r_dup", "c_inter", "c_outer", "r_inter", "r_outer", "n_escape",
];

/// Read `(i, column)` pairs from a trace CSV, skipping rows where the column is empty.
pub fn read_trace_column(path: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| super::parse_error(path, 1, format!("no `{name}` column in header")))
    };
    let (ci, cv) = (find("i")?, find(column)?);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        if field(cv).is_empty() {
            continue;
        }
        let parse = |c: usize| {
            field(c)
                .parse::<f64>()
                .map_err(|_| super::parse_error(path, line, format!("invalid number `{}`", field(c))))
        };
        out.push((parse(ci)?, parse(cv)?));
    }
    Ok(out)
}

#[derive(Serialize)]
struct BenchRow<'a> {
    implementation: &'a str,
    workers: usize,
    time_s: f64,
    balls_per_s: f64,
    r_inter: f64,
}

pub fn write_bench_csv(reports: &[BenchReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if reports.is_empty() {
        w.write_record(["implementation", "workers", "time_s", "balls_per_s", "r_inter"])?;
    }
    for r in reports {
        w.serialize(BenchRow {
            implementation: &r.implementation,
            workers: r.workers,
            time_s: r.elapsed_seconds,
            balls_per_s: r.balls_per_second,
            r_inter: r.r_inter,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn labeled() -> PointCloud {
        let pts = (0..100).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let labels = (0..100)
            .map(|i| if i < 50 { Label::Inter } else { Label::Outer })
            .collect();
        PointCloud::new(pts, Some(labels)).unwrap()
    }

    #[test]
    fn evaluation_counts() {
        let cloud = labeled();
        let det: Vec<usize> = (0..40).chain([99]).collect();
        let e = EvaluationReport::new(&det, &cloud).unwrap();
        assert_eq!((e.detected_inter, e.detected_outer, e.missed_inter), (40, 1, 10));
        assert!((e.r_inter - 0.8).abs() < 1e-15 && (e.r_outer - 0.02).abs() < 1e-15);
        let empty = EvaluationReport::new(&[], &cloud).unwrap();
        assert_eq!((empty.r_inter, empty.r_outer), (0.0, 0.0));
    }

    #[test]
    fn evaluation_needs_labels() {
        let cloud = PointCloud::unlabeled(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]).unwrap();
        assert!(EvaluationReport::new(&[0], &cloud).is_err());
    }
}
