//! Output artifacts: CSV and JSON files written atomically, and SVG charts
//! that always come with a sidecar CSV of the plotted numbers.

mod svg;

pub use svg::{loglog_slope, render_svg, Chart, Series};

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use frontlab::model::{Field, Profile};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed input {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never observe a truncated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp).map_err(io(&tmp))?;
        f.write_all(bytes).map_err(io(&tmp))?;
        f.sync_all().map_err(io(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Appends one compact JSON line.
pub fn append_jsonl<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut line = serde_json::to_vec(value)?;
    line.push(b'\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io(path))?;
    f.write_all(&line).map_err(io(path))
}

pub fn csv_string<I, R, S>(header: &[&str], rows: I) -> Result<String, ReportError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv<I, R, S>(path: &Path, header: &[&str], rows: I) -> Result<(), ReportError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    write_atomic(path, csv_string(header, rows)?.as_bytes())
}

/// Masked nodes are written with an empty value and `masked = 1`.
pub fn profile_csv(p: &Profile) -> Result<String, ReportError> {
    let rows = p.values.iter().enumerate().map(|(i, v)| {
        let (value, masked) = if v.is_finite() { (v.to_string(), "0") } else { (String::new(), "1") };
        vec![p.cross.y(i).to_string(), value, masked.to_string()]
    });
    csv_string(&["y", "value", "masked"], rows)
}

pub fn field_csv(u: &Field) -> Result<String, ReportError> {
    let g = &u.grid;
    let rows = (0..g.ny()).flat_map(|i| {
        (0..g.nz()).map(move |j| vec![g.cross().y(i).to_string(), g.z(j).to_string(), u.at(i, j).to_string()])
    });
    csv_string(&["y", "z", "u"], rows)
}

/// A numeric CSV table; empty cells read as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Reads a CSV whose columns are numeric; non-numeric cells (such as a
/// status column) read as NaN.
pub fn read_table(path: &Path) -> Result<Table, ReportError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(ReportError::Malformed {
                path: path.to_path_buf(),
                message: format!("row of {} cells under a header of {}", rec.len(), header.len()),
            });
        }
        rows.push(rec.iter().map(|c| c.trim().parse().unwrap_or(f64::NAN)).collect());
    }
    Ok(Table { header, rows })
}

/// Sidecar CSV of a chart, columns `series,x,y`.
pub fn chart_csv(chart: &Chart) -> Result<String, ReportError> {
    let rows = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(move |(x, y)| vec![s.name.clone(), x.to_string(), y.to_string()]));
    csv_string(&["series", "x", "y"], rows)
}

/// Path of the sidecar of `<stem>.svg`: `<stem>.plot.csv`.
pub fn sidecar_path(svg_path: &Path) -> PathBuf {
    svg_path.with_extension("plot.csv")
}

/// Writes the SVG and its sidecar; returns the sidecar path.
pub fn write_chart(svg_path: &Path, chart: &Chart) -> Result<PathBuf, ReportError> {
    let sidecar = sidecar_path(svg_path);
    write_atomic(&sidecar, chart_csv(chart)?.as_bytes())?;
    write_atomic(svg_path, render_svg(chart).as_bytes())?;
    Ok(sidecar)
}
