//! Text point-cloud formats: XYZ, ASCII PLY and OFF. Faces are parsed past and
//! dropped. Coordinates are written with 17 significant digits, which is enough
//! for an exact `f64` round trip.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    PlyAscii,
    Off,
}

impl CloudFormat {
    /// Picks the format from the file extension; anything unknown is XYZ.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("ply") => CloudFormat::PlyAscii,
            Some("off") => CloudFormat::Off,
            _ => CloudFormat::Xyz,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut cloud = parse_cloud(&text, CloudFormat::from_path(path), path)?;
    if cloud.id.is_none() {
        cloud.id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    Ok(cloud)
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let text = format_cloud(cloud, CloudFormat::from_path(path));
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn format_cloud(cloud: &PointCloud, format: CloudFormat) -> String {
    let mut out = String::new();
    match format {
        CloudFormat::Xyz => {}
        CloudFormat::PlyAscii => {
            let _ = write!(
                out,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
                cloud.len()
            );
        }
        CloudFormat::Off => {
            let _ = writeln!(out, "OFF\n{} 0 0", cloud.len());
        }
    }
    for p in cloud.points() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    /// Next non-blank, non-comment line with its 1-based number.
    fn next_content(&mut self, comment: &str) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with(comment) {
                return Some((i + 1, t));
            }
        }
        None
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("'{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite coordinate '{tok}'")));
    }
    Ok(v)
}

fn parse_usize(tok: Option<&str>, path: &Path, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("{what} '{tok}' is not a non-negative integer")))
}

fn finish(points: Vec<Point>, path: &Path, line: usize) -> Result<PointCloud> {
    if points.is_empty() {
        return Err(parse_err(path, line, "file contains no points"));
    }
    PointCloud::new(points)
}

/// Parses `text` in the given format; `path` is only used in error messages.
pub fn parse_cloud(text: &str, format: CloudFormat, path: &Path) -> Result<PointCloud> {
    match format {
        CloudFormat::Xyz => parse_xyz(text, path),
        CloudFormat::PlyAscii => parse_ply(text, path),
        CloudFormat::Off => parse_off(text, path),
    }
}

fn parse_xyz(text: &str, path: &Path) -> Result<PointCloud> {
    let mut lines = Lines::new(text);
    let mut points = Vec::new();
    let mut last = 0;
    while let Some((n, line)) = lines.next_content("#") {
        last = n;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(path, n, format!("expected 3 coordinates, found {}", toks.len())));
        }
        points.push(Point::new(
            parse_f64(toks[0], path, n)?,
            parse_f64(toks[1], path, n)?,
            parse_f64(toks[2], path, n)?,
        ));
    }
    finish(points, path, last)
}

fn parse_ply(text: &str, path: &Path) -> Result<PointCloud> {
    let mut lines = Lines::new(text);
    match lines.next_content("comment") {
        Some((_, "ply")) => {}
        Some((n, _)) => return Err(parse_err(path, n, "missing 'ply' magic")),
        None => return Err(parse_err(path, 1, "empty file")),
    }
    let mut vertex_count = None;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    let mut header_end = 0;
    loop {
        let (n, line) = lines
            .next_content("comment")
            .ok_or_else(|| parse_err(path, header_end + 1, "header has no end_header"))?;
        header_end = n;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(parse_err(path, n, format!("unsupported PLY format '{other}'"))),
            ["obj_info", ..] => {}
            ["element", name, count] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    vertex_count = Some(parse_usize(Some(count), path, n, "vertex count")?);
                }
            }
            ["property", "list", ..] => {
                if in_vertex {
                    return Err(parse_err(path, n, "list properties on vertices are not supported"));
                }
            }
            ["property", _ty, name] => {
                if in_vertex {
                    vertex_props.push(name.to_string());
                }
            }
            ["end_header"] => break,
            _ => return Err(parse_err(path, n, format!("unexpected header line '{line}'"))),
        }
    }
    let count = vertex_count.ok_or_else(|| parse_err(path, header_end, "no vertex element"))?;
    let slot = |axis: &str| {
        vertex_props
            .iter()
            .position(|p| p == axis)
            .ok_or_else(|| parse_err(path, header_end, format!("vertex element lacks property '{axis}'")))
    };
    let (ix, iy, iz) = (slot("x")?, slot("y")?, slot("z")?);
    let mut points = Vec::with_capacity(count);
    let mut last = header_end;
    for _ in 0..count {
        let (n, line) = lines
            .next_content("comment")
            .ok_or_else(|| parse_err(path, last + 1, format!("expected {count} vertices, found {}", points.len())))?;
        last = n;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != vertex_props.len() {
            return Err(parse_err(
                path,
                n,
                format!("expected {} vertex values, found {}", vertex_props.len(), toks.len()),
            ));
        }
        points.push(Point::new(
            parse_f64(toks[ix], path, n)?,
            parse_f64(toks[iy], path, n)?,
            parse_f64(toks[iz], path, n)?,
        ));
    }
    finish(points, path, last)
}

fn parse_off(text: &str, path: &Path) -> Result<PointCloud> {
    let mut lines = Lines::new(text);
    let (n, first) = lines.next_content("#").ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let rest = first
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(path, n, "first token must be 'OFF'"))?
        .trim();
    // some exporters glue the counts onto the magic line
    let (counts_line, counts) = if rest.is_empty() {
        lines.next_content("#").ok_or_else(|| parse_err(path, n + 1, "missing counts line"))?
    } else {
        (n, rest)
    };
    let mut toks = counts.split_whitespace();
    let vertex_count = parse_usize(toks.next(), path, counts_line, "vertex count")?;
    parse_usize(toks.next(), path, counts_line, "face count")?;
    let mut points = Vec::with_capacity(vertex_count);
    let mut last = counts_line;
    for _ in 0..vertex_count {
        let (n, line) = lines.next_content("#").ok_or_else(|| {
            parse_err(path, last + 1, format!("expected {vertex_count} vertices, found {}", points.len()))
        })?;
        last = n;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(path, n, format!("expected 3 coordinates, found {}", toks.len())));
        }
        points.push(Point::new(
            parse_f64(toks[0], path, n)?,
            parse_f64(toks[1], path, n)?,
            parse_f64(toks[2], path, n)?,
        ));
    }
    finish(points, path, last)
}

/// One non-negative integer label per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = Lines::new(&text);
    let mut labels = Vec::new();
    while let Some((n, line)) = lines.next_content("#") {
        labels.push(parse_usize(Some(line), path, n, "label")?);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}
