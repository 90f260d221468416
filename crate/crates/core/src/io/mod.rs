//! Point-cloud files, configuration files, and run reports.

mod config;
mod ply;
mod report;
mod xyz;

pub use config::{apply_setting, parse_config, read_config};
pub use ply::{parse_ply, write_cloud, write_ply_string};
pub use report::{
    read_report, read_trace_column, write_bench_csv, write_json, write_trace_csv, EvaluationReport, RunReport,
    TRACE_COLUMNS,
};
pub use xyz::parse_xyz;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{Label, PointCloud, Vec3};

/// Default name of the integer vertex property carrying layer labels.
pub const DEFAULT_LABEL_PROPERTY: &str = "layer";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    Xyz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudFile {
    pub format: CloudFormat,
    pub path: PathBuf,
    pub label_property: Option<String>,
}

impl CloudFile {
    /// Format from the extension: `.ply` is PLY, anything else is XYZ.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::Xyz,
        };
        CloudFile {
            format,
            path,
            label_property: Some(DEFAULT_LABEL_PROPERTY.to_string()),
        }
    }
}

/// Points and optional labels as parsed, before cloud invariants are applied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawCloud {
    pub points: Vec<Vec3>,
    pub labels: Option<Vec<Label>>,
}

impl RawCloud {
    /// Drop exact coordinate duplicates, keeping the first occurrence.
    /// Returns how many points were removed.
    pub fn dedup_exact(&mut self) -> usize {
        let key = |p: &Vec3| {
            // +0.0 folds -0.0 onto 0.0
            [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()]
        };
        let mut seen = HashSet::with_capacity(self.points.len());
        let keep: Vec<bool> = self.points.iter().map(|p| seen.insert(key(p))).collect();
        let removed = keep.iter().filter(|k| !**k).count();
        if removed > 0 {
            let mut it = keep.iter();
            self.points.retain(|_| *it.next().unwrap());
            if let Some(labels) = &mut self.labels {
                let mut it = keep.iter();
                labels.retain(|_| *it.next().unwrap());
            }
        }
        removed
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCloud {
    pub cloud: PointCloud,
    pub duplicates_removed: usize,
}

/// Read, deduplicate and validate a cloud file.
pub fn read_cloud(file: &CloudFile) -> Result<LoadedCloud> {
    let text = std::fs::read_to_string(&file.path).map_err(|e| Error::io(&file.path, e))?;
    let mut raw = match file.format {
        CloudFormat::PlyAscii => parse_ply(&text, &file.path, file.label_property.as_deref())?,
        CloudFormat::Xyz => parse_xyz(&text, &file.path)?,
    };
    let duplicates_removed = raw.dedup_exact();
    if raw.points.len() < 2 {
        return Err(Error::invalid(format!(
            "{}: need at least 2 distinct points, found {}",
            file.path.display(),
            raw.points.len()
        )));
    }
    Ok(LoadedCloud {
        cloud: PointCloud::new(raw.points, raw.labels)?,
        duplicates_removed,
    })
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}
