use std::collections::BTreeMap;
use std::path::Path;

use super::{is_missing, parse_number, parse_positive, parse_year, read_text, Diagnostic, Loaded, Table};
use crate::dataset::{Dataset, EffortUnit, ModelSpec, ProjectRecord, SizeUnit, Term};
use crate::error::{Error, Result};

pub const NASA93_EXPECTED_ROWS: usize = 93;

/// The fifteen COCOMO81 effort multipliers, in file order.
pub const EFFORT_MULTIPLIERS: [&str; 15] = [
    "rely", "data", "cplx", "time", "stor", "virt", "turn", "acap", "aexp", "pcap", "vexp",
    "lexp", "modp", "tool", "sced",
];

const MODES: [&str; 3] = ["organic", "semidetached", "embedded"];

fn canonical_mode(raw: &str) -> Option<&'static str> {
    let lowered = raw.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
    MODES.iter().copied().find(|m| *m == lowered)
}

/// `ln(effort) ~ ln(KLOC) + ln(EAF) + mode`, reference mode organic.
pub fn nasa93_spec() -> ModelSpec {
    ModelSpec::log_effort(vec![
        Term::Numeric {
            name: "size".into(),
            log_transform: true,
        },
        Term::Numeric {
            name: "eaf".into(),
            log_transform: true,
        },
        Term::Categorical {
            name: "mode".into(),
            reference_level: "organic".into(),
            levels: MODES.iter().map(|m| m.to_string()).collect(),
        },
    ])
}

pub fn load_nasa93(path: impl AsRef<Path>) -> Result<Loaded> {
    let path = path.as_ref();
    parse_nasa93(&read_text(path)?, path)
}

/// Effort multipliers must be numeric; EAF is their product. Effort stays in
/// calendar months.
pub fn parse_nasa93(text: &str, source: &Path) -> Result<Loaded> {
    let table = Table::parse(text, source)?;
    let id_col = table.column(&["recordnumber", "id", "project"]);
    let year_col = table.require(&["year"])?;
    let mode_col = table.require(&["mode", "dev_mode"])?;
    let kloc_col = table.require(&["equivphyskloc", "kloc"])?;
    let effort_col = table.require(&["act_effort", "effort"])?;
    let em_cols: Vec<usize> = EFFORT_MULTIPLIERS
        .iter()
        .map(|em| table.require(&[em]))
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(table.rows.len());
    for (i, raw) in table.rows.iter().enumerate() {
        let row = i + 1;
        let id = id_col
            .map(|c| raw[c].clone())
            .filter(|s| !is_missing(s))
            .unwrap_or_else(|| row.to_string());
        let mut numerics = BTreeMap::new();
        let mut eaf = 1.0;
        for (name, &col) in EFFORT_MULTIPLIERS.iter().zip(&em_cols) {
            let value = parse_positive(&raw[col], row, name)?;
            eaf *= value;
            numerics.insert(name.to_string(), value);
        }
        numerics.insert("eaf".to_string(), eaf);
        let mode = canonical_mode(&raw[mode_col]).ok_or_else(|| Error::UnknownMode {
            row,
            mode: raw[mode_col].clone(),
        })?;
        let effort = parse_number(&raw[effort_col], row, "act_effort")?;
        let size = parse_number(&raw[kloc_col], row, "kloc")?;
        for (column, value) in [("act_effort", effort), ("kloc", size)] {
            if value <= 0.0 {
                return Err(Error::NonPositiveValue {
                    row,
                    column: column.into(),
                    value,
                });
            }
        }
        records.push(ProjectRecord {
            id,
            completion_year: parse_year(&raw[year_col], row, "year")?,
            start_date: None,
            duration_days: None,
            effort,
            size,
            categoricals: BTreeMap::from([("mode".to_string(), mode.to_string())]),
            numerics,
        });
    }

    let mut diagnostics = Vec::new();
    if records.len() != NASA93_EXPECTED_ROWS {
        diagnostics.push(Diagnostic::warning(
            "RowCountMismatch",
            format!(
                "expected {NASA93_EXPECTED_ROWS} projects, found {}",
                records.len()
            ),
        ));
    }
    let dataset = Dataset::new(
        "nasa93",
        records,
        nasa93_spec(),
        EffortUnit::CalendarMonths,
        SizeUnit::Kloc,
    )?;
    Ok(Loaded {
        dataset,
        diagnostics,
    })
}
