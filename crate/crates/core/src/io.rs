//! File formats.
//!
//! * Path CSV: header `time,x1,...,xd`, one sample per row.
//! * Path JSON: `{"times": [...], "points": [[...], ...]}`.
//! * CDE problem JSON: `{"A": [A_1, ..., A_d], "x0": [...], "driver": ...}`
//!   where each `A_i` is a list of rows and `driver` is either an inline path
//!   document or `{"file": "<path>"}`, resolved against the problem file.
//! * Estimate CSV: one row per `(level, s, t)` prefixed by schema, config
//!   hash and seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::{EstimateReport, REPORT_SCHEMA};
use crate::cde::LinearCdeProblem;
use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl PathDocument {
    pub fn into_path(self) -> Result<PiecewiseLinearPath> {
        PiecewiseLinearPath::new(self.times, self.points)
    }
}

impl From<&PiecewiseLinearPath> for PathDocument {
    fn from(path: &PiecewiseLinearPath) -> Self {
        PathDocument {
            times: path.times().to_vec(),
            points: path.points().to_vec(),
        }
    }
}

pub fn parse_path_csv(text: &str, origin: &Path) -> Result<PiecewiseLinearPath> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(origin, e.to_string()))?.clone();
    let d = headers.len().saturating_sub(1);
    let expected = std::iter::once("time".to_string()).chain((1..=d).map(|i| format!("x{i}")));
    if d == 0 || !headers.iter().zip(expected).all(|(h, e)| h == e) {
        return Err(Error::parse(
            origin,
            format!("header must be time,x1,...,xd, got {}", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(origin, e.to_string()))?;
        let values = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(origin, format!("row {}: {e}", row + 2)))?;
        times.push(values[0]);
        points.push(values[1..].to_vec());
    }
    PiecewiseLinearPath::new(times, points).map_err(|e| Error::parse(origin, e.to_string()))
}

pub fn read_path_csv(file: impl AsRef<Path>) -> Result<PiecewiseLinearPath> {
    let file = file.as_ref();
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    parse_path_csv(&text, file)
}

pub fn path_to_csv(path: &PiecewiseLinearPath) -> String {
    let mut out = String::from("time");
    for i in 1..=path.dim() {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (t, x) in path.times().iter().zip(path.points()) {
        out.push_str(&t.to_string());
        for v in x {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn read_path_json(file: impl AsRef<Path>) -> Result<PiecewiseLinearPath> {
    let file = file.as_ref();
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    let doc: PathDocument = serde_json::from_str(&text).map_err(|e| Error::parse(file, e.to_string()))?;
    doc.into_path().map_err(|e| Error::parse(file, e.to_string()))
}

/// Read a path, choosing the format from the extension (`.json` or CSV).
pub fn read_path(file: impl AsRef<Path>) -> Result<PiecewiseLinearPath> {
    let file = file.as_ref();
    match file.extension().and_then(|e| e.to_str()) {
        Some("json") => read_path_json(file),
        _ => read_path_csv(file),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DriverDocument {
    File { file: PathBuf },
    Inline(PathDocument),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDocument {
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    pub x0: Vec<f64>,
    pub driver: DriverDocument,
}

fn matrix_from_rows(rows: &[Vec<f64>], index: usize) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!("A_{} is not square", index + 1)));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ProblemDocument {
    /// Build the problem; file references are resolved against `base`.
    pub fn into_problem(self, base: &Path) -> Result<LinearCdeProblem> {
        let driver = match self.driver {
            DriverDocument::File { file } => read_path(base.join(file))?,
            DriverDocument::Inline(doc) => doc.into_path()?,
        };
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(i, rows)| matrix_from_rows(rows, i))
            .collect::<Result<Vec<_>>>()?;
        LinearCdeProblem::new(a, DVector::from_vec(self.x0), Arc::new(driver))
    }
}

pub fn read_problem_json(file: impl AsRef<Path>) -> Result<LinearCdeProblem> {
    let file = file.as_ref();
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    let doc: ProblemDocument = serde_json::from_str(&text).map_err(|e| Error::parse(file, e.to_string()))?;
    doc.into_problem(file.parent().unwrap_or(Path::new(".")))
}

#[derive(Serialize)]
struct EstimateCsvRow<'a> {
    schema: u32,
    config_hash: &'a str,
    seed: u64,
    level: usize,
    s: f64,
    t: f64,
    omega: f64,
    lhs: f64,
    rhs: f64,
    slack: f64,
    pass: bool,
}

/// One CSV row per `(level, s, t)` of the report.
pub fn write_estimate_csv<W: Write>(writer: W, report: &EstimateReport, config_hash: &str) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in &report.rows {
        out.serialize(EstimateCsvRow {
            schema: REPORT_SCHEMA,
            config_hash,
            seed: report.seed,
            level: row.level,
            s: row.s,
            t: row.t,
            omega: row.omega,
            lhs: row.lhs,
            rhs: row.rhs,
            slack: row.slack,
            pass: row.pass,
        })
        .map_err(|e| Error::InvalidInput(format!("csv serialization failed: {e}")))?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
