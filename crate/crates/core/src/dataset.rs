//! Project records, datasets and the declarative model formula attached to
//! each dataset.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_YEAR: i32 = 1960;
pub const MAX_YEAR: i32 = 2100;

/// One software project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub completion_year: i32,
    pub start_date: Option<NaiveDate>,
    pub duration_days: Option<u32>,
    pub effort: f64,
    pub size: f64,
    #[serde(default)]
    pub categoricals: BTreeMap<String, String>,
    #[serde(default)]
    pub numerics: BTreeMap<String, f64>,
}

impl ProjectRecord {
    /// Looks up a numeric attribute. `effort` and `size` resolve to the
    /// dedicated fields; everything else comes from `numerics`.
    pub fn numeric(&self, name: &str) -> Option<f64> {
        match name {
            "effort" => Some(self.effort),
            "size" => Some(self.size),
            other => self.numerics.get(other).copied(),
        }
    }

    pub fn categorical(&self, name: &str) -> Option<&str> {
        self.categoricals.get(name).map(String::as_str)
    }

    /// `start_date + duration_days`, when both are known.
    pub fn completion_date(&self) -> Option<NaiveDate> {
        let start = self.start_date?;
        let days = self.duration_days?;
        Some(start + Duration::days(i64::from(days)))
    }

    pub fn validate(&self, row: usize) -> Result<()> {
        if !(self.effort > 0.0) {
            return Err(Error::NonPositiveValue {
                row,
                column: "effort".into(),
                value: self.effort,
            });
        }
        if !(self.size > 0.0) {
            return Err(Error::NonPositiveValue {
                row,
                column: "size".into(),
                value: self.size,
            });
        }
        if !(MIN_YEAR..=MAX_YEAR).contains(&self.completion_year) {
            return Err(Error::YearOutOfRange {
                row,
                year: self.completion_year,
            });
        }
        if let Some(done) = self.completion_date() {
            if done.year() != self.completion_year {
                return Err(Error::InconsistentDates {
                    id: self.id.clone(),
                    year: self.completion_year,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffortUnit {
    PersonHours,
    /// Calendar months; one month is 152 person-hours. Never converted.
    CalendarMonths,
}

impl EffortUnit {
    pub const HOURS_PER_CALENDAR_MONTH: f64 = 152.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeUnit {
    Kloc,
    AdjustedFunctionPoints,
    FunctionPoints,
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub name: String,
    pub log_transform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Numeric {
        name: String,
        log_transform: bool,
    },
    Categorical {
        name: String,
        reference_level: String,
        levels: Vec<String>,
    },
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Numeric { name, .. } | Term::Categorical { name, .. } => name,
        }
    }

    /// Number of design columns the term expands to.
    pub fn width(&self) -> usize {
        match self {
            Term::Numeric { .. } => 1,
            Term::Categorical { levels, .. } => levels.len().saturating_sub(1),
        }
    }
}

/// Regression formula: a response plus numeric and dummy-coded terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub response: Response,
    pub terms: Vec<Term>,
}

impl ModelSpec {
    /// Log-effort response with the given terms.
    pub fn log_effort(terms: Vec<Term>) -> Self {
        ModelSpec {
            response: Response {
                name: "effort".into(),
                log_transform: true,
            },
            terms,
        }
    }

    /// Explanatory columns after dummy expansion, intercept excluded.
    pub fn explanatory_count(&self) -> usize {
        self.terms.iter().map(Term::width).sum()
    }

    /// Minimum training size for a well-formed model.
    pub fn min_training_size(&self) -> usize {
        self.explanatory_count() + 2
    }

    /// Numeric variables that may be log transformed: the response first,
    /// then numeric predictors in term order.
    pub fn numeric_variables(&self) -> Vec<&str> {
        let mut names = vec![self.response.name.as_str()];
        names.extend(self.terms.iter().filter_map(|t| match t {
            Term::Numeric { name, .. } => Some(name.as_str()),
            Term::Categorical { .. } => None,
        }));
        names
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        seen.insert(self.response.name.as_str());
        for term in &self.terms {
            if !seen.insert(term.name()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate term `{}`",
                    term.name()
                )));
            }
            if let Term::Categorical {
                name,
                reference_level,
                levels,
            } = term
            {
                if !levels.contains(reference_level) {
                    return Err(Error::InvalidSpec(format!(
                        "reference level {reference_level:?} of `{name}` is not among its levels"
                    )));
                }
                let distinct: BTreeSet<_> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(Error::InvalidSpec(format!("`{name}` lists a level twice")));
                }
            }
        }
        Ok(())
    }

    /// Copy of the spec whose categorical levels are restricted to those
    /// observed in `records`. The reference level is kept when observed;
    /// otherwise the first observed level in spec order takes its place.
    pub fn restricted_to(&self, records: &[&ProjectRecord]) -> ModelSpec {
        let terms = self
            .terms
            .iter()
            .map(|term| match term {
                Term::Numeric { .. } => term.clone(),
                Term::Categorical {
                    name,
                    reference_level,
                    levels,
                } => {
                    let observed: BTreeSet<&str> =
                        records.iter().filter_map(|r| r.categorical(name)).collect();
                    let kept: Vec<String> = levels
                        .iter()
                        .filter(|l| observed.contains(l.as_str()))
                        .cloned()
                        .collect();
                    let reference = if kept.contains(reference_level) {
                        reference_level.clone()
                    } else {
                        kept.first().cloned().unwrap_or_else(|| reference_level.clone())
                    };
                    Term::Categorical {
                        name: name.clone(),
                        reference_level: reference,
                        levels: kept,
                    }
                }
            })
            .collect();
        ModelSpec {
            response: self.response.clone(),
            terms,
        }
    }
}

/// A validated, chronologically indexed collection of projects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<ProjectRecord>,
    pub origin_year: i32,
    pub spec: ModelSpec,
    pub effort_unit: EffortUnit,
    pub size_unit: SizeUnit,
}

impl Dataset {
    /// Validates every record against the spec and computes the origin year.
    pub fn new(
        name: impl Into<String>,
        records: Vec<ProjectRecord>,
        spec: ModelSpec,
        effort_unit: EffortUnit,
        size_unit: SizeUnit,
    ) -> Result<Self> {
        spec.check()?;
        let origin_year = records
            .iter()
            .map(|r| r.completion_year)
            .min()
            .ok_or(Error::EmptyDataset)?;
        for (row, record) in records.iter().enumerate() {
            record.validate(row + 1)?;
            Self::check_terms(record, &spec)?;
        }
        Ok(Dataset {
            name: name.into(),
            records,
            origin_year,
            spec,
            effort_unit,
            size_unit,
        })
    }

    fn check_terms(record: &ProjectRecord, spec: &ModelSpec) -> Result<()> {
        for term in &spec.terms {
            match term {
                Term::Numeric { name, .. } => {
                    let value = record.numeric(name).ok_or_else(|| Error::MissingAttribute {
                        id: record.id.clone(),
                        term: name.clone(),
                    })?;
                    if !value.is_finite() {
                        return Err(Error::InvalidSpec(format!(
                            "record {}: `{name}` is not finite",
                            record.id
                        )));
                    }
                }
                Term::Categorical { name, levels, .. } => {
                    let level = record.categorical(name).ok_or_else(|| Error::MissingAttribute {
                        id: record.id.clone(),
                        term: name.clone(),
                    })?;
                    if !levels.iter().any(|l| l == level) {
                        return Err(Error::UnknownLevel {
                            id: record.id.clone(),
                            term: name.clone(),
                            level: level.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Year index of a calendar year: the origin year maps to 1, gaps kept.
    pub fn year_index_of(&self, year: i32) -> i32 {
        year - self.origin_year + 1
    }

    pub fn year_index(&self, record: &ProjectRecord) -> i32 {
        self.year_index_of(record.completion_year)
    }

    /// Distinct completion years in ascending order.
    pub fn years(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.records.iter().map(|r| r.completion_year).collect();
        set.into_iter().collect()
    }

    pub fn record(&self, id: &str) -> Option<&ProjectRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Records looked up by id, in the order given.
    pub fn select<'a>(&'a self, ids: &[String]) -> Vec<&'a ProjectRecord> {
        let by_id: BTreeMap<&str, &ProjectRecord> =
            self.records.iter().map(|r| (r.id.as_str(), r)).collect();
        ids.iter().filter_map(|id| by_id.get(id.as_str()).copied()).collect()
    }

    /// Count of records per level of a categorical attribute.
    pub fn level_histogram(&self, term: &str) -> BTreeMap<String, usize> {
        let mut hist = BTreeMap::new();
        for r in &self.records {
            if let Some(level) = r.categorical(term) {
                *hist.entry(level.to_string()).or_insert(0) += 1;
            }
        }
        hist
    }
}
