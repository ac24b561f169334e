//! File formats: text grids, 16-bit PGM images and CSV tables.
//!
//! Text grid layout:
//!
//! ```text
//! RELGRID 1
//! <width> <height>
//! <width space-separated reals>   (height lines)
//! ```
//!
//! Reals use the shortest representation that parses back to the same
//! `f64`; a missing value is written `nan`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, MembershipGrid};
use crate::kernels::Kernel;

pub const GRID_MAGIC: &str = "RELGRID 1";

/// Shortest round-trip decimal rendering; exponent form for very small or
/// very large magnitudes.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == 0.0 || (1e-5..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn parse_real(token: &str) -> Option<f64> {
    if token == "nan" {
        return Some(f64::NAN);
    }
    token.parse::<f64>().ok().filter(|v| !v.is_nan())
}

pub fn render_grid(grid: &Grid) -> Result<String> {
    if let Some(v) = grid.values().iter().find(|v| v.is_infinite()) {
        return Err(Error::InvalidParameter(format!(
            "cannot serialize non-finite value {v}"
        )));
    }
    let mut out = String::with_capacity(grid.len() * 8 + 32);
    out.push_str(GRID_MAGIC);
    out.push('\n');
    out.push_str(&format!("{} {}\n", grid.width(), grid.height()));
    for row in 0..grid.height() {
        let line: Vec<String> = grid.row(row).iter().map(|&v| format_real(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a text grid. Unless `raw`, every value must lie in `[0, 1]`.
pub fn parse_grid(text: &str, raw: bool) -> Result<Grid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == GRID_MAGIC => {}
        Some((n, l)) => return Err(parse_err(n, format!("expected '{GRID_MAGIC}', found '{l}'"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let (n, dims) = lines.next().ok_or_else(|| parse_err(2, "missing dimensions"))?;
    let dims: Vec<&str> = dims.split_whitespace().collect();
    let (width, height) = match dims.as_slice() {
        [w, h] => (
            w.parse::<usize>()
                .map_err(|_| parse_err(n, format!("bad width '{w}'")))?,
            h.parse::<usize>()
                .map_err(|_| parse_err(n, format!("bad height '{h}'")))?,
        ),
        _ => return Err(parse_err(n, "expected '<width> <height>'")),
    };
    if width == 0 || height == 0 {
        return Err(parse_err(n, "dimensions must be positive"));
    }
    let mut values = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > height {
            return Err(parse_err(n, format!("more than {height} rows")));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v = parse_real(tok).ok_or_else(|| parse_err(n, format!("non-numeric token '{tok}'")))?;
            if !raw && !(0.0..=1.0).contains(&v) {
                return Err(parse_err(n, format!("value {tok} is outside [0, 1]")));
            }
            values.push(v);
        }
        if values.len() - before != width {
            return Err(parse_err(
                n,
                format!("expected {width} values, found {}", values.len() - before),
            ));
        }
    }
    if rows != height {
        return Err(parse_err(
            rows + 3,
            format!("expected {height} rows, found {rows}"),
        ));
    }
    Grid::new(width, height, values)
}

pub fn write_grid(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    fs::write(path, render_grid(grid)?)?;
    Ok(())
}

pub fn read_grid(path: impl AsRef<Path>, raw: bool) -> Result<Grid> {
    parse_grid(&fs::read_to_string(path)?, raw)
}

pub fn read_membership_grid(path: impl AsRef<Path>) -> Result<MembershipGrid> {
    MembershipGrid::try_from(read_grid(path, false)?)
}

/// Kernels are written in the grid format.
pub fn write_kernel(path: impl AsRef<Path>, kernel: &Kernel) -> Result<()> {
    let g = Grid::new(kernel.size_x(), kernel.size_y(), kernel.values().to_vec())?;
    write_grid(path, &g)
}

/// Binary PGM (`P5`, maxval 65535, big-endian samples). `v` maps to
/// `round(v * 65535)`; values outside `[0, 1]` are clamped with a warning.
pub fn encode_pgm(grid: &Grid) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", grid.width(), grid.height());
    let mut out = Vec::with_capacity(header.len() + grid.len() * 2);
    out.extend_from_slice(header.as_bytes());
    let mut clamped = 0usize;
    for &v in grid.values() {
        let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        if c != v {
            clamped += 1;
        }
        let sample = (c * 65535.0).round() as u16;
        out.extend_from_slice(&sample.to_be_bytes());
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} value(s) outside [0, 1] while writing PGM");
    }
    out
}

pub fn write_pgm(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pgm(grid))?;
    Ok(())
}

/// One row of a p-sweep or timing run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BenchRecord {
    pub experiment: String,
    pub method: String,
    /// `p` for sweeps, image side for timings.
    pub param: f64,
    /// MSE for sweeps, median seconds for timings.
    pub metric: f64,
    /// Equal to `metric` for sweeps, minimum seconds for timings.
    pub metric_min: f64,
    pub repeats: u32,
}

pub const BENCH_HEADER: [&str; 6] = [
    "experiment",
    "method",
    "param",
    "metric",
    "metric_min",
    "repeats",
];

pub fn render_records(records: &[BenchRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(BENCH_HEADER)?;
    for r in records {
        w.write_record([
            r.experiment.clone(),
            r.method.clone(),
            format_real(r.param),
            format_real(r.metric),
            format_real(r.metric_min),
            r.repeats.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_records(path: impl AsRef<Path>, records: &[BenchRecord]) -> Result<()> {
    fs::write(path, render_records(records)?)?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

/// Named columns of equal length, written as `index,<name>...`.
pub fn render_columns(names: &[&str], columns: &[&[f64]]) -> Result<String> {
    if names.len() != columns.len() {
        return Err(Error::InvalidParameter(
            "column names and columns differ in count".into(),
        ));
    }
    let len = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != len) {
        return Err(Error::InvalidParameter("columns differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index"];
    header.extend_from_slice(names);
    w.write_record(&header)?;
    for i in 0..len {
        let mut rec = vec![i.to_string()];
        rec.extend(columns.iter().map(|c| format_real(c[i])));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_columns(path: impl AsRef<Path>, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    fs::write(path, render_columns(names, columns)?)?;
    Ok(())
}

pub fn write_vector(path: impl AsRef<Path>, name: &str, values: &[f64]) -> Result<()> {
    write_columns(path, &[name], &[values])
}

/// Reads a file written by [`write_columns`]: returns column names (without
/// `index`) and the columns.
pub fn read_columns(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let names: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        for (c, field) in rec.iter().skip(1).enumerate() {
            let v = parse_real(field)
                .ok_or_else(|| parse_err(i + 2, format!("non-numeric field '{field}'")))?;
            cols[c].push(v);
        }
    }
    Ok((names, cols))
}
