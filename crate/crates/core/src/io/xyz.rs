use std::path::Path;

use super::{parse_error, RawCloud};
use crate::error::Result;
use crate::geometry::Vec3;

/// Whitespace-separated `x y z` per line. Blank lines and `#` comments are skipped.
pub fn parse_xyz(text: &str, path: &Path) -> Result<RawCloud> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(parse_error(
                path,
                n + 1,
                format!("expected 3 coordinates, found {}", tokens.len()),
            ));
        }
        let mut xyz = [0.0; 3];
        for (slot, tok) in xyz.iter_mut().zip(&tokens) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(path, n + 1, format!("invalid coordinate `{tok}`")))?;
        }
        points.push(Vec3::from(xyz));
    }
    Ok(RawCloud { points, labels: None })
}
