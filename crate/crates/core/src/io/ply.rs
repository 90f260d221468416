//! ASCII PLY reading and writing.
//!
//! Only the `vertex` element is interpreted; other elements are parsed for
//! well-formedness and skipped. Binary encodings are rejected.

use std::fmt::Write as _;
use std::path::Path;

use super::{parse_error, write_atomic, RawCloud};
use crate::error::{Error, Result};
use crate::geometry::{Label, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarKind {
    Int,
    Float,
}

fn scalar_kind(name: &str) -> Option<ScalarKind> {
    match name {
        "char" | "uchar" | "short" | "ushort" | "int" | "uint" | "int8" | "uint8" | "int16" | "uint16" | "int32"
        | "uint32" => Some(ScalarKind::Int),
        "float" | "double" | "float32" | "float64" => Some(ScalarKind::Float),
        _ => None,
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, kind: ScalarKind },
    List { name: String },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name } => name,
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Parse an ASCII PLY document. `label_property` names an integer vertex
/// property holding layer codes (0 inter, 1 outer, anything else unknown).
pub fn parse_ply(text: &str, path: &Path, label_property: Option<&str>) -> Result<RawCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let err = |line: usize, msg: String| parse_error(path, line, msg);

    match lines.next() {
        Some((_, "ply")) => {}
        Some((n, other)) => return Err(err(n, format!("expected `ply` magic, found `{other}`"))),
        None => return Err(err(1, "empty file".into())),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    let mut header_end = None;
    for (n, line) in lines.by_ref() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            None => continue,
            Some("comment") | Some("obj_info") => continue,
            Some("format") => {
                if saw_format {
                    return Err(err(n, "duplicate format line".into()));
                }
                match (tok.next(), tok.next(), tok.next()) {
                    (Some("ascii"), Some("1.0"), None) => saw_format = true,
                    (Some(enc @ ("binary_little_endian" | "binary_big_endian")), _, _) => {
                        return Err(err(n, format!("unsupported encoding `{enc}`, only ascii is read")))
                    }
                    _ => return Err(err(n, format!("malformed format line `{line}`"))),
                }
            }
            Some("element") => {
                if !saw_format {
                    return Err(err(n, "element declared before format line".into()));
                }
                let (Some(name), Some(count), None) = (tok.next(), tok.next(), tok.next()) else {
                    return Err(err(n, format!("malformed element line `{line}`")));
                };
                let count = count
                    .parse::<usize>()
                    .map_err(|_| err(n, format!("invalid element count `{count}`")))?;
                if elements.iter().any(|e| e.name == name) {
                    return Err(err(n, format!("duplicate element `{name}`")));
                }
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let Some(el) = elements.last_mut() else {
                    return Err(err(n, "property declared before any element".into()));
                };
                let rest: Vec<&str> = tok.collect();
                let prop = match rest.as_slice() {
                    ["list", ct, it, name] => {
                        if scalar_kind(ct) != Some(ScalarKind::Int) || scalar_kind(it).is_none() {
                            return Err(err(n, format!("invalid list property types in `{line}`")));
                        }
                        Property::List { name: name.to_string() }
                    }
                    [ty, name] => match scalar_kind(ty) {
                        Some(kind) => Property::Scalar {
                            name: name.to_string(),
                            kind,
                        },
                        None => return Err(err(n, format!("unknown property type `{ty}`"))),
                    },
                    _ => return Err(err(n, format!("malformed property line `{line}`"))),
                };
                if el.properties.iter().any(|p| p.name() == prop.name()) {
                    return Err(err(n, format!("duplicate property `{}`", prop.name())));
                }
                el.properties.push(prop);
            }
            Some("end_header") => {
                if tok.next().is_some() {
                    return Err(err(n, "trailing tokens after end_header".into()));
                }
                header_end = Some(n);
                break;
            }
            Some(other) => return Err(err(n, format!("unknown header keyword `{other}`"))),
        }
    }
    let Some(header_end) = header_end else {
        return Err(err(text.lines().count().max(1), "header is missing end_header".into()));
    };
    if !saw_format {
        return Err(err(header_end, "header is missing the format line".into()));
    }
    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| err(header_end, "no vertex element".into()))?;
    let vertex = &elements[vertex_pos];
    let find_scalar = |name: &str| {
        vertex
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name: n, .. } if n == name))
    };
    let (Some(ix), Some(iy), Some(iz)) = (find_scalar("x"), find_scalar("y"), find_scalar("z")) else {
        return Err(err(
            header_end,
            "vertex element needs scalar x, y and z properties".into(),
        ));
    };
    let label_idx = match label_property.and_then(|l| vertex.properties.iter().position(|p| p.name() == l)) {
        Some(i) => match &vertex.properties[i] {
            Property::Scalar {
                kind: ScalarKind::Int, ..
            } => Some(i),
            _ => {
                return Err(err(
                    header_end,
                    format!(
                        "label property `{}` must be an integer scalar",
                        vertex.properties[i].name()
                    ),
                ))
            }
        },
        None => None,
    };

    let mut raw = RawCloud {
        points: Vec::with_capacity(vertex.count),
        labels: label_idx.map(|_| Vec::with_capacity(vertex.count)),
    };
    let mut last_line = header_end;
    for (ei, el) in elements.iter().enumerate() {
        for _ in 0..el.count {
            let (n, line) = loop {
                match lines.next() {
                    Some((_, "")) => continue,
                    Some(l) => break l,
                    None => {
                        return Err(err(
                            last_line + 1,
                            format!("unexpected end of file inside element `{}`", el.name),
                        ))
                    }
                }
            };
            last_line = n;
            let values = parse_row(el, line).map_err(|m| err(n, m))?;
            if ei == vertex_pos {
                let p = crate::geometry::Vec3::new(values[ix], values[iy], values[iz]);
                if !p.is_finite() {
                    return Err(err(n, "non-finite vertex coordinate".into()));
                }
                raw.points.push(p);
                if let (Some(li), Some(labels)) = (label_idx, raw.labels.as_mut()) {
                    labels.push(Label::from_code(values[li] as i64));
                }
            }
        }
    }
    if let Some((n, _)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(err(n, "data after the last declared element".into()));
    }
    Ok(raw)
}

/// Values of the scalar properties of one row (list properties yield NaN placeholders).
fn parse_row(el: &Element, line: &str) -> std::result::Result<Vec<f64>, String> {
    let mut tok = line.split_whitespace();
    let mut out = Vec::with_capacity(el.properties.len());
    for p in &el.properties {
        match p {
            Property::Scalar { name, kind } => {
                let t = tok.next().ok_or_else(|| format!("missing value for `{name}`"))?;
                out.push(parse_scalar(t, *kind).ok_or_else(|| format!("invalid value `{t}` for `{name}`"))?);
            }
            Property::List { name } => {
                let t = tok.next().ok_or_else(|| format!("missing list length for `{name}`"))?;
                let len: usize = t
                    .parse()
                    .map_err(|_| format!("invalid list length `{t}` for `{name}`"))?;
                for _ in 0..len {
                    let v = tok
                        .next()
                        .ok_or_else(|| format!("list `{name}` shorter than its length"))?;
                    v.parse::<f64>()
                        .map_err(|_| format!("invalid list entry `{v}` in `{name}`"))?;
                }
                out.push(f64::NAN);
            }
        }
    }
    if tok.next().is_some() {
        return Err(format!("too many values for element `{}`", el.name));
    }
    Ok(out)
}

fn parse_scalar(t: &str, kind: ScalarKind) -> Option<f64> {
    match kind {
        ScalarKind::Int => t.parse::<i64>().ok().map(|v| v as f64),
        ScalarKind::Float => t.parse::<f64>().ok(),
    }
}

/// Render a cloud (or the `indices` subset of it) as ASCII PLY. Coordinates are
/// written with round-trip precision; labels go to a `uchar layer` property.
pub fn write_ply_string(cloud: &PointCloud, indices: Option<&[usize]>) -> Result<String> {
    let all: Vec<usize>;
    let indices = match indices {
        Some(ix) => {
            if let Some(&bad) = ix.iter().find(|&&i| i >= cloud.len()) {
                return Err(Error::invalid(format!("index {bad} out of range")));
            }
            ix
        }
        None => {
            all = (0..cloud.len()).collect();
            &all
        }
    };
    let mut s = String::with_capacity(64 * indices.len() + 200);
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", indices.len());
    s.push_str("property float x\nproperty float y\nproperty float z\n");
    if cloud.is_labeled() {
        s.push_str("property uchar layer\n");
    }
    s.push_str("end_header\n");
    for &i in indices {
        let p = cloud.points()[i];
        if cloud.is_labeled() {
            let _ = writeln!(s, "{} {} {} {}", p.x, p.y, p.z, cloud.label(i).code());
        } else {
            let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
        }
    }
    Ok(s)
}

pub fn write_cloud(cloud: &PointCloud, indices: Option<&[usize]>, path: &Path) -> Result<()> {
    write_atomic(path, write_ply_string(cloud, indices)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &str = "test.ply";

    #[test]
    fn three_vertices_without_labels() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n";
        let raw = parse_ply(text, Path::new(P), Some("layer")).unwrap();
        assert_eq!(raw.points.len(), 3);
        assert!(raw.labels.is_none());
    }

    #[test]
    fn labels_and_extra_elements() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nproperty uchar layer\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 0\n1 0 0 1\n3 0 1 1\n";
        let raw = parse_ply(text, Path::new(P), Some("layer")).unwrap();
        assert_eq!(raw.labels, Some(vec![Label::Inter, Label::Outer]));
    }

    #[test]
    fn error_carries_line_number() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 zero 0\n";
        match parse_ply(text, Path::new(P), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("{other:?}"),
        }
    }
}
