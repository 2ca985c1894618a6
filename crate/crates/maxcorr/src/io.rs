//! Data ingestion and report persistence.
//!
//! CSV input is deliberately rigid — comma-separated, optional single
//! header row, no locale handling — because golden tests pin bytes.
//! Reports are JSON documents carrying a `schema_version` field and are
//! byte-identical for identical contents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::VerdictThresholds;
use crate::corr::{CorrError, DataMatrix};
use crate::dist::DistributionSpec;
use crate::mc::McMode;

/// Version stamp written into every emitted JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} fields, found {found}")]
    ShapeError { line: usize, expected: usize, found: usize },
    #[error("line {line}, column {column}: not a finite number")]
    ParseError { line: usize, column: usize },
    #[error("need at least 2 rows and 2 columns, got {rows} x {cols}")]
    InsufficientData { rows: usize, cols: usize },
    #[error(transparent)]
    Data(#[from] CorrError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
}

// ---------------------------------------------------------------------------
// CSV input
// ---------------------------------------------------------------------------

/// Loads a rectangular CSV of observations (rows) by variables (columns).
///
/// A single leading header row is skipped automatically when any of its
/// fields fails to parse as a number. Line numbers in errors are 1-based
/// positions in the file, header included.
pub fn load_csv(path: &Path) -> Result<DataMatrix<f64>, IoError> {
    parse_csv(&fs::read_to_string(path)?)
}

/// [`load_csv`] on in-memory text; exposed for tests and pipelines.
pub fn parse_csv(text: &str) -> Result<DataMatrix<f64>, IoError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut first_data_line = true;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if let Some(w) = width {
            if fields.len() != w {
                return Err(IoError::ShapeError { line: line_no, expected: w, found: fields.len() });
            }
        }

        let parsed: Result<Vec<f64>, usize> = fields
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(col + 1)
            })
            .collect();

        match parsed {
            Ok(values) => {
                width.get_or_insert(values.len());
                rows.push(values);
                first_data_line = false;
            }
            Err(column) => {
                // Any non-numeric token in the first row marks a header.
                if first_data_line && width.is_none() {
                    width = Some(fields.len());
                    first_data_line = false;
                } else {
                    return Err(IoError::ParseError { line: line_no, column });
                }
            }
        }
    }

    let n = rows.len();
    let p = width.unwrap_or(0).min(rows.first().map_or(0, Vec::len));
    if n < 2 || p < 2 {
        return Err(IoError::InsufficientData { rows: n, cols: p });
    }
    // Transpose to column-major.
    let mut values = vec![0.0f64; n * p];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            values[j * n + i] = *v;
        }
    }
    Ok(DataMatrix::new(n, p, values)?)
}

// ---------------------------------------------------------------------------
// Report documents
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DocumentOut<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Serializes a report as pretty JSON with a `schema_version` stamp.
/// Identical reports produce identical bytes.
pub fn render_report<T: Serialize>(report: &T, kind: &str) -> Result<String, IoError> {
    let doc = DocumentOut { schema_version: SCHEMA_VERSION, kind, body: report };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Writes [`render_report`] output to a file.
pub fn write_report<T: Serialize>(report: &T, kind: &str, path: &Path) -> Result<(), IoError> {
    Ok(fs::write(path, render_report(report, kind)?)?)
}

/// Reads a document back, checking the schema stamp.
pub fn read_report<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(IoError::SchemaVersion { found, expected: SCHEMA_VERSION });
    }
    Ok(serde_json::from_value(value)?)
}

/// Flat CSV dump of per-replication statistics for external plotting.
pub fn write_values_csv(
    path: &Path,
    values: &[f64],
    aux: Option<(&str, &[f64])>,
) -> Result<(), IoError> {
    let mut out = String::new();
    match aux {
        Some((name, aux_values)) => {
            out.push_str(&format!("value,{name}\n"));
            for (v, a) in values.iter().zip(aux_values) {
                out.push_str(&format!("{v},{a}\n"));
            }
        }
        None => {
            out.push_str("value\n");
            for v in values {
                out.push_str(&format!("{v}\n"));
            }
        }
    }
    Ok(fs::write(path, out)?)
}

// ---------------------------------------------------------------------------
// Test report and run configuration
// ---------------------------------------------------------------------------

/// Result of the coherence test on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: usize,
    pub p: usize,
    /// Coherence `L`, the largest absolute off-diagonal correlation.
    pub coherence: f64,
    /// 1-based column indices attaining the coherence.
    pub argmax_pair: (usize, usize),
    /// `n L^2 - a(p)`.
    pub t_statistic: f64,
    /// `sqrt(n / log n) L`.
    pub weak_law: f64,
    /// Limit-law tail probability of the observed statistic.
    pub p_value: f64,
    /// True when the p-value underflowed and was clamped.
    pub p_value_clamped: bool,
    pub shape_ratio: f64,
    pub shape_warning: bool,
    /// 1-based indices of constant columns dropped before the scan.
    pub dropped_columns: Vec<usize>,
}

/// Everything the command line resolved for one invocation; round-trips
/// through JSON losslessly so a report can cite its exact provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// 0 means the library default worker count.
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub values_csv: Option<PathBuf>,
    pub skip_degenerate: bool,
    pub verdict_thresholds: VerdictThresholds,
    pub request: RunRequest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunRequest {
    Test { input: PathBuf },
    Simulate { dist: DistributionSpec, n: usize, p: usize, reps: usize, mode: McMode },
    Condition { dist: DistributionSpec, n_grid: Vec<u64>, x_grid: Vec<f64> },
    Dist { dist: DistributionSpec, moments: Vec<f64>, tail_points: Vec<f64> },
    Pvalue { t: f64 },
    Quantile { q: f64 },
}

// ---------------------------------------------------------------------------
