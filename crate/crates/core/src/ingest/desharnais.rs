use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{is_missing, parse_number, parse_positive, parse_year, read_text, Diagnostic, Loaded, Table};
use crate::dataset::{Dataset, EffortUnit, ModelSpec, ProjectRecord, SizeUnit, Term};
use crate::error::{Error, Result};

pub const DESHARNAIS_EXPECTED_ROWS: usize = 81;

const REFERENCE_LANGUAGE: &str = "1";

pub fn load_desharnais(path: impl AsRef<Path>) -> Result<Loaded> {
    let path = path.as_ref();
    parse_desharnais(&read_text(path)?, path)
}

/// Rows with any missing field are dropped and reported. The model is
/// `ln(effort) ~ ln(adjusted_fp) + language` with language "1" as reference.
pub fn parse_desharnais(text: &str, source: &Path) -> Result<Loaded> {
    let table = Table::parse(text, source)?;
    let id_col = table.column(&["project", "id"]);
    let year_col = table.require(&["yearend", "year"])?;
    let effort_col = table.require(&["effort"])?;
    let size_col = table.require(&["pointsajust", "pointsadjust", "adjusted_fp", "adjustedfp"])?;
    let lang_col = table.require(&["language"])?;

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for (i, raw) in table.rows.iter().enumerate() {
        let row = i + 1;
        let id = id_col
            .map(|c| raw[c].clone())
            .filter(|s| !is_missing(s))
            .unwrap_or_else(|| row.to_string());
        if raw.iter().any(|v| is_missing(v)) {
            dropped.push(id);
            continue;
        }
        let language = parse_number(&raw[lang_col], row, "language")?;
        let mut numerics = BTreeMap::new();
        for (col, header) in table.headers.iter().enumerate() {
            if [year_col, effort_col, size_col, lang_col].contains(&col) || Some(col) == id_col {
                continue;
            }
            if let Ok(v) = raw[col].trim().parse::<f64>() {
                numerics.insert(header.clone(), v);
            }
        }
        records.push(ProjectRecord {
            id,
            completion_year: parse_year(&raw[year_col], row, "yearend")?,
            start_date: None,
            duration_days: None,
            effort: parse_positive(&raw[effort_col], row, "effort")?,
            size: parse_positive(&raw[size_col], row, "pointsajust")?,
            categoricals: BTreeMap::from([(
                "language".to_string(),
                format!("{}", language as i64),
            )]),
            numerics,
        });
    }

    let levels: BTreeSet<String> = records
        .iter()
        .filter_map(|r| r.categorical("language").map(str::to_string))
        .collect();
    if !levels.contains(REFERENCE_LANGUAGE) {
        return Err(Error::InvalidSpec(
            "no project uses the reference language \"1\"".into(),
        ));
    }
    let spec = ModelSpec::log_effort(vec![
        Term::Numeric {
            name: "size".into(),
            log_transform: true,
        },
        Term::Categorical {
            name: "language".into(),
            reference_level: REFERENCE_LANGUAGE.into(),
            levels: levels.into_iter().collect(),
        },
    ]);

    let mut diagnostics = Vec::new();
    if !dropped.is_empty() {
        diagnostics.push(
            Diagnostic::warning(
                "DroppedIncompleteRows",
                format!("dropped {} rows with missing fields", dropped.len()),
            )
            .with_ids(dropped),
        );
    }
    let dataset = Dataset::new(
        "desharnais",
        records,
        spec,
        EffortUnit::PersonHours,
        SizeUnit::AdjustedFunctionPoints,
    )?;
    Ok(Loaded {
        dataset,
        diagnostics,
    })
}
