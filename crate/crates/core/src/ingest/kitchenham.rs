use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, Duration};

use super::{is_missing, parse_date, parse_number, parse_positive, read_text, Diagnostic, Loaded, Table};
use crate::dataset::{Dataset, EffortUnit, ModelSpec, ProjectRecord, SizeUnit, Term};
use crate::error::{Error, Result};

pub const KITCHENHAM_CLIENT: i64 = 2;

const REFERENCE_TYPE: &str = "Development";

/// Maps the dataset's one-letter project type codes to level names.
pub fn kitchenham_type_level(raw: &str) -> String {
    match raw.trim() {
        "D" | "d" => "Development".into(),
        "P" | "p" => "Perfective".into(),
        other => {
            let lowered = other.to_ascii_lowercase();
            match lowered.as_str() {
                "development" => "Development".into(),
                "perfective" => "Perfective".into(),
                _ => other.to_string(),
            }
        }
    }
}

pub fn load_kitchenham(path: impl AsRef<Path>) -> Result<Loaded> {
    let path = path.as_ref();
    parse_kitchenham(&read_text(path)?, path)
}

/// Keeps client 2, derives completion dates from start date plus duration,
/// and models `ln(effort) ~ ln(size) + type` with "Development" as reference.
pub fn parse_kitchenham(text: &str, source: &Path) -> Result<Loaded> {
    let table = Table::parse(text, source)?;
    let id_col = table.column(&["project", "id"]);
    let client_col = table.require(&["client.code", "client_code", "client"])?;
    let type_col = table.require(&["project.type", "project_type", "type"])?;
    let start_col = table.require(&["actual.start.date", "actual_start_date", "start_date"])?;
    let duration_col = table.require(&["actual.duration", "actual_duration", "duration"])?;
    let effort_col = table.require(&["actual.effort", "actual_effort", "effort"])?;
    let size_col = table.require(&[
        "adjusted.function.points",
        "adjusted_function_points",
        "function_points",
        "size",
    ])?;

    let mut records = Vec::new();
    let mut zero_duration = Vec::new();
    for (i, raw) in table.rows.iter().enumerate() {
        let row = i + 1;
        let client = parse_number(&raw[client_col], row, "client.code")?;
        if client as i64 != KITCHENHAM_CLIENT {
            continue;
        }
        let id = id_col
            .map(|c| raw[c].clone())
            .filter(|s| !is_missing(s))
            .unwrap_or_else(|| row.to_string());
        let start = parse_date(&raw[start_col], row, None)?;
        let duration = parse_number(&raw[duration_col], row, "actual.duration")?;
        if duration < 0.0 || duration.fract() != 0.0 {
            return Err(Error::BadNumber {
                row,
                column: "actual.duration".into(),
                raw: raw[duration_col].clone(),
            });
        }
        let duration_days = duration as u32;
        if duration_days == 0 {
            zero_duration.push(id.clone());
        }
        let done = start + Duration::days(i64::from(duration_days));
        records.push(ProjectRecord {
            id,
            completion_year: done.year(),
            start_date: Some(start),
            duration_days: Some(duration_days),
            effort: parse_positive(&raw[effort_col], row, "actual.effort")?,
            size: parse_positive(&raw[size_col], row, "adjusted.function.points")?,
            categoricals: BTreeMap::from([(
                "type".to_string(),
                kitchenham_type_level(&raw[type_col]),
            )]),
            numerics: BTreeMap::new(),
        });
    }

    let observed: BTreeSet<String> = records
        .iter()
        .filter_map(|r| r.categorical("type").map(str::to_string))
        .collect();
    if !observed.contains(REFERENCE_TYPE) {
        return Err(Error::InvalidSpec(
            "no client 2 project has type \"Development\"".into(),
        ));
    }
    let mut levels = vec![REFERENCE_TYPE.to_string()];
    levels.extend(observed.into_iter().filter(|l| l != REFERENCE_TYPE));
    let spec = ModelSpec::log_effort(vec![
        Term::Numeric {
            name: "size".into(),
            log_transform: true,
        },
        Term::Categorical {
            name: "type".into(),
            reference_level: REFERENCE_TYPE.into(),
            levels,
        },
    ]);

    let mut diagnostics = Vec::new();
    if !zero_duration.is_empty() {
        diagnostics.push(
            Diagnostic::warning(
                "ZeroDuration",
                "projects with zero duration complete on their start date",
            )
            .with_ids(zero_duration),
        );
    }
    let dataset = Dataset::new(
        "kitchenham",
        records,
        spec,
        EffortUnit::PersonHours,
        SizeUnit::FunctionPoints,
    )?;
    Ok(Loaded {
        dataset,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    const HEADER: &str = "Project,Client.code,Project.type,Actual.start.date,Actual.duration,Actual.effort,Adjusted.function.points,Estimated.completion.date,First.estimate,First.estimate.method";

    #[test]
    fn filters_client_and_derives_completion() {
        let text = format!(
            "{HEADER}\n\
             1,1,A,1994-04-01,100,500,100,1994-07-01,450,A\n\
             2,2,D,1994-12-01,60,1200,300,1995-01-15,1000,A\n\
             3,2,P,1995-03-10,0,80,20,1995-03-10,90,C\n\
             4,2,P,1996-01-05,30,100,35,1996-02-01,90,C\n"
        );
        let loaded = parse_kitchenham(&text, Path::new("k.csv")).unwrap();
        let ds = &loaded.dataset;
        assert_eq!(ds.records.len(), 3);
        assert_eq!(ds.records[0].completion_year, 1995);
        assert_eq!(
            ds.records[1].completion_date(),
            NaiveDate::from_ymd_opt(1995, 3, 10)
        );
        assert_eq!(loaded.diagnostics[0].record_ids, vec!["3"]);
        let hist = ds.level_histogram("type");
        assert_eq!(hist["Development"], 1);
        assert_eq!(hist["Perfective"], 2);
    }

    #[test]
    fn bad_date_is_reported() {
        let text = format!("{HEADER}\n2,2,D,someday,60,1200,300,x,1,A\n");
        assert!(matches!(
            parse_kitchenham(&text, Path::new("k.csv")),
            Err(Error::BadDate { row: 1, .. })
        ));
    }
}
