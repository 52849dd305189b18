//! CSV tables and the JSON run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::observables::SetupWarning;
use crate::propagator::BlowUp;

pub const SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.json";

/// C `%.12e`: twelve fraction digits, signed exponent of at least two digits.
pub fn format_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent always present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// A named CSV table with a fixed header. Missing cells stay empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Builds a table from equal-length or shorter columns; short columns
    /// leave trailing cells empty.
    pub fn from_columns(name: impl Into<String>, header: Vec<String>, columns: &[&[f64]]) -> Self {
        debug_assert_eq!(header.len(), columns.len());
        let len = columns.iter().map(|c| c.len()).max().unwrap_or(0);
        let rows = (0..len).map(|i| columns.iter().map(|c| c.get(i).copied()).collect()).collect();
        Table {
            name: name.into(),
            header,
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push_str("\r\n");
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if let Some(v) = cell {
                    let _ = write!(out, "{}", format_sci(*v));
                }
            }
            out.push_str("\r\n");
        }
        out
    }
}

/// Terminal result for one truncation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderResult {
    pub order: usize,
    /// Terminal `T` (tunnel), terminal `E` (eigen) or terminal local density
    /// (compare). Absent when the run stopped early.
    pub value: Option<f64>,
    pub relative_error: Option<f64>,
    /// Asymptote or plateau detected over the analysis window.
    pub converged: bool,
    pub blow_up: Option<BlowUp>,
    /// Integration error that aborted this order.
    pub failure: Option<String>,
    pub saturated_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rms_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_seconds: Option<f64>,
}

impl OrderResult {
    pub fn completed(&self) -> bool {
        self.blow_up.is_none() && self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub value: f64,
    pub samples: usize,
    /// Largest edge-band density seen during the run.
    pub max_edge_density: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub experiment: Experiment,
    /// Oracle value the relative errors refer to.
    pub reference: f64,
    pub oracle: OracleSummary,
    pub results: Vec<OrderResult>,
    pub warnings: Vec<SetupWarning>,
    /// Compare runs: oracle samples were interpolated onto the ZEVCA times.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interpolated: Option<bool>,
    pub config: ExperimentConfig,
}

impl RunSummary {
    pub fn result(&self, order: usize) -> Option<&OrderResult> {
        self.results.iter().find(|r| r.order == order)
    }

    pub fn all_orders_failed(&self) -> bool {
        !self.results.iter().any(OrderResult::completed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub tables: Vec<Table>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes the CSV tables and `summary.json` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for t in &self.tables {
            fs::write(dir.join(&t.name), t.to_csv())?;
        }
        let mut json = self.summary.to_json()?;
        json.push('\n');
        fs::write(dir.join(SUMMARY_FILE), json)?;
        Ok(())
    }
}

pub fn relative_error(approx: f64, reference: f64) -> f64 {
    (approx - reference).abs() / reference.abs()
}
