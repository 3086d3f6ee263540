//! Point-cloud, CSV and key-value file formats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use forcerank::{Point3, PointCloud};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Xyz,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("ply") => Ok(CloudFormat::Ply),
            Some("xyz") | Some("txt") => Ok(CloudFormat::Xyz),
            _ => Err(CliError::Usage(format!(
                "{}: cannot infer the cloud format (expected .ply or .xyz)",
                path.display()
            ))),
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let points = match CloudFormat::from_path(path)? {
        CloudFormat::Ply => parse_ply(path, &read_bytes(path)?)?,
        CloudFormat::Xyz => parse_xyz(path, &read_text(path)?)?,
    };
    if points.is_empty() {
        return Err(CliError::parse_file(path, "file contains no points"));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(CliError::parse_file(path, format!("point {i} has a non-finite coordinate")));
    }
    Ok(PointCloud::new(points)?)
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let text = match CloudFormat::from_path(path)? {
        CloudFormat::Ply => ply_text(cloud, None),
        CloudFormat::Xyz => xyz_text(cloud),
    };
    write_text(path, &text)
}

// ---- XYZ ----

pub fn parse_xyz(path: &Path, text: &str) -> Result<Vec<Point3>> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut c = [0.0; 3];
        for v in &mut c {
            let tok = it.next().ok_or_else(|| CliError::parse(path, n + 1, "expected three coordinates"))?;
            *v = tok.parse().map_err(|_| CliError::parse(path, n + 1, format!("bad coordinate {tok:?}")))?;
        }
        points.push(Point3::from(c));
    }
    Ok(points)
}

pub fn xyz_text(cloud: &PointCloud) -> String {
    let mut s = String::with_capacity(cloud.len() * 40);
    for p in cloud.points() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}

// ---- PLY ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    /// Byte offset of the body.
    body: usize,
    /// Line number of the first body line.
    body_line: usize,
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| CliError::parse_file(path, "PLY header is not terminated by end_header"))?;
        let raw = &bytes[pos..pos + end];
        pos += end + 1;
        line_no += 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| CliError::parse(path, line_no, "PLY header is not valid text"))?
            .trim();
        let err = |msg: String| CliError::parse(path, line_no, msg);
        let mut words = line.split_whitespace();
        let Some(keyword) = words.next() else { continue };
        if line_no == 1 {
            if keyword != "ply" {
                return Err(err("missing PLY magic".into()));
            }
            continue;
        }
        match keyword {
            "format" => {
                encoding = Some(match words.next() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLe,
                    other => return Err(err(format!("unsupported PLY format {:?}", other.unwrap_or("")))),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                let name = words.next().ok_or_else(|| err("element without a name".into()))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| err("element count is not an integer".into()))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            "property" => {
                let el = elements.last_mut().ok_or_else(|| err("property before any element".into()))?;
                let ty = words.next().ok_or_else(|| err("property without a type".into()))?;
                let prop = if ty == "list" {
                    let count = words.next().and_then(Scalar::parse);
                    let item = words.next().and_then(Scalar::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => Property::List { count, item },
                        _ => return Err(err("bad list property".into())),
                    }
                } else {
                    let ty = Scalar::parse(ty).ok_or_else(|| err(format!("unknown property type {ty:?}")))?;
                    let name = words.next().ok_or_else(|| err("property without a name".into()))?;
                    Property::Scalar { name: name.to_string(), ty }
                };
                el.props.push(prop);
            }
            "end_header" => break,
            other => return Err(err(format!("unexpected header keyword {other:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| CliError::parse_file(path, "PLY header has no format line"))?;
    Ok(Header { encoding, elements, body: pos, body_line: line_no + 1 })
}

fn xyz_slots(path: &Path, el: &Element) -> Result<[usize; 3]> {
    let mut slots = [usize::MAX; 3];
    for (k, p) in el.props.iter().enumerate() {
        if let Property::Scalar { name, .. } = p {
            match name.as_str() {
                "x" => slots[0] = k,
                "y" => slots[1] = k,
                "z" => slots[2] = k,
                _ => {}
            }
        }
    }
    if slots.contains(&usize::MAX) {
        return Err(CliError::parse_file(path, "vertex element lacks x, y or z"));
    }
    Ok(slots)
}

pub fn parse_ply(path: &Path, bytes: &[u8]) -> Result<Vec<Point3>> {
    let header = parse_header(path, bytes)?;
    let vi = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| CliError::parse_file(path, "PLY file has no vertex element"))?;
    let vertex = &header.elements[vi];
    let slots = xyz_slots(path, vertex)?;
    match header.encoding {
        Encoding::Ascii => parse_ply_ascii(path, &header, vi, slots, &bytes[header.body..]),
        Encoding::BinaryLe => parse_ply_binary(path, &header, vi, slots, &bytes[header.body..]),
    }
}

fn parse_ply_ascii(path: &Path, header: &Header, vi: usize, slots: [usize; 3], body: &[u8]) -> Result<Vec<Point3>> {
    let text = std::str::from_utf8(body).map_err(|_| CliError::parse_file(path, "PLY body is not valid text"))?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + header.body_line, l)).filter(|(_, l)| !l.trim().is_empty());
    let truncated = || CliError::parse_file(path, "PLY body ends before the declared vertex count");
    for el in &header.elements[..vi] {
        for _ in 0..el.count {
            lines.next().ok_or_else(truncated)?;
        }
    }
    let vertex = &header.elements[vi];
    let mut points = Vec::with_capacity(vertex.count);
    for _ in 0..vertex.count {
        let (line_no, line) = lines.next().ok_or_else(truncated)?;
        let mut tokens = line.split_whitespace();
        let mut c = [0.0; 3];
        for (k, prop) in vertex.props.iter().enumerate() {
            let mut take = || -> Result<f64> {
                let tok = tokens.next().ok_or_else(|| CliError::parse(path, line_no, "too few values"))?;
                tok.parse().map_err(|_| CliError::parse(path, line_no, format!("bad value {tok:?}")))
            };
            match prop {
                Property::Scalar { .. } => {
                    let v = take()?;
                    if let Some(axis) = slots.iter().position(|&s| s == k) {
                        c[axis] = v;
                    }
                }
                Property::List { .. } => {
                    let n = take()? as usize;
                    for _ in 0..n {
                        take()?;
                    }
                }
            }
        }
        points.push(Point3::from(c));
    }
    Ok(points)
}

fn parse_ply_binary(path: &Path, header: &Header, vi: usize, slots: [usize; 3], body: &[u8]) -> Result<Vec<Point3>> {
    let truncated = || CliError::parse_file(path, "PLY body ends before the declared vertex count");
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let chunk = body.get(pos..pos + n).ok_or_else(truncated)?;
        pos += n;
        Ok(chunk)
    };
    let mut points = Vec::new();
    for (e, el) in header.elements[..=vi].iter().enumerate() {
        for _ in 0..el.count {
            let mut c = [0.0; 3];
            for (k, prop) in el.props.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let v = ty.read_le(take(ty.size())?);
                        if e == vi {
                            if let Some(axis) = slots.iter().position(|&s| s == k) {
                                c[axis] = v;
                            }
                        }
                    }
                    Property::List { count, item } => {
                        let n = count.read_le(take(count.size())?) as usize;
                        take(n * item.size())?;
                    }
                }
            }
            if e == vi {
                points.push(Point3::from(c));
            }
        }
    }
    Ok(points)
}

/// ASCII PLY with `float` x/y/z, plus `uchar` colors when given.
/// Coordinates are written in shortest round-trip form.
pub fn ply_text(cloud: &PointCloud, colors: Option<&[[u8; 3]]>) -> String {
    let mut s = String::with_capacity(cloud.len() * 48);
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property float x\nproperty float y\nproperty float z\n");
    if colors.is_some() {
        s.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    s.push_str("end_header\n");
    for (i, p) in cloud.points().iter().enumerate() {
        match colors {
            Some(c) => {
                let [r, g, b] = c[i];
                let _ = writeln!(s, "{} {} {} {r} {g} {b}", p.x, p.y, p.z);
            }
            None => {
                let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
            }
        }
    }
    s
}

/// Linear blue-to-red over a score in `[0, 2]`.
pub fn heat_color(score: f64) -> [u8; 3] {
    let t = (score / 2.0).clamp(0.0, 1.0);
    let red = (255.0 * t).round() as u8;
    [red, 0, 255 - red]
}

pub fn heatmap_colors(scores: &[f64], labels: &[u8]) -> Vec<[u8; 3]> {
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| if l != 0 { [255, 0, 0] } else { heat_color(s) })
        .collect()
}

// ---- CSV ----

/// Rows of `index,label`, sorted by index.
pub fn labels_csv(rows: &[(usize, u8)]) -> String {
    let mut s = String::from("index,label\n");
    for (i, l) in sorted(rows) {
        let _ = writeln!(s, "{i},{l}");
    }
    s
}

/// Rows of `index,score,displacement`, sorted by index.
pub fn scores_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by_key(|r| r.0);
    let mut s = String::from("index,score,displacement\n");
    for (i, score, d) in rows {
        let _ = writeln!(s, "{i},{score},{d}");
    }
    s
}

fn sorted<T: Copy>(rows: &[(usize, T)]) -> Vec<(usize, T)> {
    let mut rows = rows.to_vec();
    rows.sort_by_key(|r| r.0);
    rows
}

/// Reads `index,<column>` pairs from a headed CSV, selecting `column` by name.
pub fn read_csv_column(path: &Path, column: &str) -> Result<Vec<(usize, f64)>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| CliError::parse_file(path, "file is empty"))?;
    let names: Vec<&str> = head.split(',').map(str::trim).collect();
    if names.first() != Some(&"index") {
        return Err(CliError::parse(path, 1, "header must start with \"index\""));
    }
    let col = names
        .iter()
        .position(|&n| n == column)
        .ok_or_else(|| CliError::parse(path, 1, format!("no {column:?} column")))?;
    let mut rows = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(CliError::parse(path, n + 1, format!("expected {} fields, got {}", names.len(), fields.len())));
        }
        let index = fields[0]
            .parse()
            .map_err(|_| CliError::parse(path, n + 1, format!("bad index {:?}", fields[0])))?;
        let value = fields[col]
            .parse()
            .map_err(|_| CliError::parse(path, n + 1, format!("bad value {:?}", fields[col])))?;
        rows.push((index, value));
    }
    Ok(rows)
}

pub fn read_labels(path: &Path) -> Result<Vec<(usize, u8)>> {
    read_csv_column(path, "label")?
        .into_iter()
        .map(|(i, v)| {
            if v == 0.0 || v == 1.0 {
                Ok((i, v as u8))
            } else {
                Err(CliError::parse_file(path, format!("label of index {i} is {v}, expected 0 or 1")))
            }
        })
        .collect()
}

// ---- key = value ----

pub fn kv_text(entries: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}
