//! Loaders for the PROMISE effort datasets and for arbitrary CSV files
//! described by a schema config.
//!
//! Column names are matched case-insensitively after trimming whitespace.
//! Loaders never coerce bad values: a non-positive effort or size, an
//! unparsable number or date is reported with its 1-based data row.

mod desharnais;
mod generic;
mod kitchenham;
mod nasa93;

use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

pub use desharnais::{load_desharnais, parse_desharnais, DESHARNAIS_EXPECTED_ROWS};
pub use generic::{load_generic, parse_generic, CategoricalColumn, NumericColumn, SchemaConfig, TimeKind};
pub use kitchenham::{kitchenham_type_level, load_kitchenham, parse_kitchenham, KITCHENHAM_CLIENT};
pub use nasa93::{load_nasa93, parse_nasa93, EFFORT_MULTIPLIERS, NASA93_EXPECTED_ROWS};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticLevel {
    Warning,
    Error,
}

/// Structured loader message, serialisable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub level: DiagnosticLevel,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub record_ids: Vec<String>,
}

impl Diagnostic {
    pub fn warning(code: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            level: DiagnosticLevel::Warning,
            code: code.into(),
            message: message.into(),
            row: None,
            record_ids: Vec::new(),
        }
    }

    pub fn from_error(err: &Error) -> Self {
        let code = format!("{err:?}")
            .split(|c: char| !c.is_alphanumeric())
            .next()
            .unwrap_or("Error")
            .to_string();
        Diagnostic {
            level: DiagnosticLevel::Error,
            code,
            message: err.to_string(),
            row: None,
            record_ids: Vec::new(),
        }
    }

    pub fn with_row(mut self, row: usize) -> Self {
        self.row = Some(row);
        self
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Self {
        self.record_ids = ids;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serialises")
    }
}

/// A dataset together with the warnings raised while loading it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loaded {
    pub dataset: Dataset,
    pub diagnostics: Vec<Diagnostic>,
}

/// Named loaders for the three PROMISE datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedDataset {
    Nasa93,
    Desharnais,
    Kitchenham,
}

impl NamedDataset {
    pub fn load(self, path: impl AsRef<Path>) -> Result<Loaded> {
        match self {
            NamedDataset::Nasa93 => load_nasa93(path),
            NamedDataset::Desharnais => load_desharnais(path),
            NamedDataset::Kitchenham => load_kitchenham(path),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub(crate) fn normalize_name(name: &str) -> String {
    name.trim().to_ascii_lowercase()
}

/// A parsed CSV file with normalised header names.
pub(crate) struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let csv_err = |e: csv::Error| Error::Csv {
            path: source.to_path_buf(),
            message: e.to_string(),
        };
        let headers = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(normalize_name)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Table { headers, rows })
    }

    /// Index of the first header matching any alias.
    pub fn column(&self, aliases: &[&str]) -> Option<usize> {
        aliases.iter().find_map(|alias| {
            let alias = normalize_name(alias);
            self.headers.iter().position(|h| *h == alias)
        })
    }

    pub fn require(&self, aliases: &[&str]) -> Result<usize> {
        self.column(aliases).ok_or_else(|| Error::MissingColumn {
            column: aliases[0].to_string(),
        })
    }
}

pub(crate) fn is_missing(raw: &str) -> bool {
    let raw = raw.trim();
    raw.is_empty() || raw == "?" || raw.eq_ignore_ascii_case("na")
}

pub(crate) fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::BadNumber {
            row,
            column: column.into(),
            raw: raw.into(),
        })
}

pub(crate) fn parse_positive(raw: &str, row: usize, column: &str) -> Result<f64> {
    let value = parse_number(raw, row, column)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveValue {
            row,
            column: column.into(),
            value,
        })
    }
}

/// Calendar year; two-digit values are read as 19xx.
pub(crate) fn parse_year(raw: &str, row: usize, column: &str) -> Result<i32> {
    let value = parse_number(raw, row, column)?;
    if value.fract() != 0.0 {
        return Err(Error::BadNumber {
            row,
            column: column.into(),
            raw: raw.into(),
        });
    }
    let year = value as i32;
    Ok(if (0..100).contains(&year) { 1900 + year } else { year })
}

const DATE_FORMATS: [&str; 6] = [
    "%Y-%m-%d",
    "%d/%m/%Y",
    "%d-%b-%Y",
    "%d-%b-%y",
    "%d/%m/%y",
    "%Y/%m/%d",
];

/// Parses a date with an explicit format, or tries ISO, `dd/mm/yyyy`,
/// `dd-Mon-yyyy`, `dd-Mon-yy`, `dd/mm/yy` and `yyyy/mm/dd` in turn.
pub(crate) fn parse_date(raw: &str, row: usize, format: Option<&str>) -> Result<NaiveDate> {
    let raw = raw.trim();
    let bad = || Error::BadDate {
        row,
        raw: raw.into(),
    };
    if let Some(fmt) = format {
        return NaiveDate::parse_from_str(raw, fmt).map_err(|_| bad());
    }
    DATE_FORMATS
        .iter()
        .filter_map(|fmt| NaiveDate::parse_from_str(raw, fmt).ok())
        .find(|d| d.year() >= 100)
        .ok_or_else(bad)
}
