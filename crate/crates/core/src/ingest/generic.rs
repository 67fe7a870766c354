//! CSV files described by a TOML schema config.
//!
//! ```toml
//! name = "my-projects"
//! id_column = "id"              # optional; row number otherwise
//! effort_column = "effort"
//! size_column = "fp"
//! time_column = "finished"
//! time_kind = "date"            # "year" (default) or "date"
//! date_format = "%Y-%m-%d"      # optional; common formats are tried
//! log_effort = true             # default true
//! log_size = true               # default true
//! effort_unit = "person_hours"  # or "calendar_months"
//! size_unit = "function_points" # kloc | adjusted_function_points | unspecified
//!
//! [[categorical]]
//! name = "type"
//! column = "project_type"       # optional; defaults to name
//! reference_level = "Development"
//! levels = ["Development", "Maintenance"]   # optional; observed levels otherwise
//!
//! [[numeric]]
//! name = "team"
//! log_transform = false
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{is_missing, parse_date, parse_number, parse_positive, parse_year, read_text, Loaded, Table};
use crate::dataset::{Dataset, EffortUnit, ModelSpec, ProjectRecord, Response, SizeUnit, Term};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeKind {
    #[default]
    Year,
    Date,
}

fn yes() -> bool {
    true
}

fn default_effort_unit() -> EffortUnit {
    EffortUnit::PersonHours
}

fn default_size_unit() -> SizeUnit {
    SizeUnit::Unspecified
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub reference_level: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericColumn {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default)]
    pub log_transform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    pub effort_column: String,
    pub size_column: String,
    pub time_column: String,
    #[serde(default)]
    pub time_kind: TimeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_format: Option<String>,
    #[serde(default = "yes")]
    pub log_effort: bool,
    #[serde(default = "yes")]
    pub log_size: bool,
    #[serde(default = "default_effort_unit")]
    pub effort_unit: EffortUnit,
    #[serde(default = "default_size_unit")]
    pub size_unit: SizeUnit,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categorical: Vec<CategoricalColumn>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub numeric: Vec<NumericColumn>,
}

impl SchemaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigMismatch(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?)
    }
}

pub fn load_generic(path: impl AsRef<Path>, config: &SchemaConfig) -> Result<Loaded> {
    let path = path.as_ref();
    parse_generic(&read_text(path)?, path, config)
}

pub fn parse_generic(text: &str, source: &Path, config: &SchemaConfig) -> Result<Loaded> {
    let table = Table::parse(text, source)?;
    let locate = |column: &str| {
        table.column(&[column]).ok_or_else(|| {
            Error::ConfigMismatch(format!("column `{column}` is not in {}", source.display()))
        })
    };
    let id_col = config.id_column.as_deref().map(locate).transpose()?;
    let effort_col = locate(&config.effort_column)?;
    let size_col = locate(&config.size_column)?;
    let time_col = locate(&config.time_column)?;
    let cat_cols: Vec<usize> = config
        .categorical
        .iter()
        .map(|c| locate(c.column.as_deref().unwrap_or(&c.name)))
        .collect::<Result<_>>()?;
    let num_cols: Vec<usize> = config
        .numeric
        .iter()
        .map(|c| locate(c.column.as_deref().unwrap_or(&c.name)))
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(table.rows.len());
    for (i, raw) in table.rows.iter().enumerate() {
        let row = i + 1;
        let id = id_col
            .map(|c| raw[c].clone())
            .filter(|s| !is_missing(s))
            .unwrap_or_else(|| row.to_string());
        let completion_year = match config.time_kind {
            TimeKind::Year => parse_year(&raw[time_col], row, &config.time_column)?,
            TimeKind::Date => parse_date(&raw[time_col], row, config.date_format.as_deref())?.year(),
        };
        let categoricals = config
            .categorical
            .iter()
            .zip(&cat_cols)
            .map(|(c, &col)| (c.name.clone(), raw[col].clone()))
            .collect();
        let numerics = config
            .numeric
            .iter()
            .zip(&num_cols)
            .map(|(c, &col)| Ok((c.name.clone(), parse_number(&raw[col], row, &c.name)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        records.push(ProjectRecord {
            id,
            completion_year,
            start_date: None,
            duration_days: None,
            effort: parse_positive(&raw[effort_col], row, &config.effort_column)?,
            size: parse_positive(&raw[size_col], row, &config.size_column)?,
            categoricals,
            numerics,
        });
    }

    let mut terms = vec![Term::Numeric {
        name: "size".into(),
        log_transform: config.log_size,
    }];
    terms.extend(config.numeric.iter().map(|c| Term::Numeric {
        name: c.name.clone(),
        log_transform: c.log_transform,
    }));
    for c in &config.categorical {
        let levels = match &c.levels {
            Some(levels) => levels.clone(),
            None => {
                let observed: BTreeSet<String> = records
                    .iter()
                    .filter_map(|r| r.categorical(&c.name).map(str::to_string))
                    .collect();
                observed.into_iter().collect()
            }
        };
        if !levels.contains(&c.reference_level) {
            return Err(Error::ConfigMismatch(format!(
                "reference level {:?} of `{}` never occurs",
                c.reference_level, c.name
            )));
        }
        terms.push(Term::Categorical {
            name: c.name.clone(),
            reference_level: c.reference_level.clone(),
            levels,
        });
    }
    let spec = ModelSpec {
        response: Response {
            name: "effort".into(),
            log_transform: config.log_effort,
        },
        terms,
    };
    let dataset = Dataset::new(
        config.name.clone(),
        records,
        spec,
        config.effort_unit,
        config.size_unit,
    )?;
    Ok(Loaded {
        dataset,
        diagnostics: Vec::new(),
    })
}
