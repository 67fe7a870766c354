//! Sequential accumulation of training data by completion year.
//!
//! The first training set is the shortest run of leading years that holds
//! enough projects for a well-formed model; the next year with projects is
//! the test set. Each test year is then folded into training and the
//! following year becomes the new test set, until the last year is tested.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ModelSpec, ProjectRecord};
use crate::error::{Error, Result};
use crate::kernel::{weights_for_target, KernelType};
use crate::regression::{build_design, fit_ols, fit_wls, predict, FitResult, TransformPlan};
use crate::stats::{relative_error, shapiro_wilk, Normality, NormalityResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChronoSplit {
    pub split_index: usize,
    pub training_record_ids: Vec<String>,
    pub test_record_ids: Vec<String>,
    /// Test-year projects removed by the start-date filter.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_test_ids: Vec<String>,
    pub training_span_years: i32,
    pub target_year_index: i32,
    pub test_year: i32,
}

impl ChronoSplit {
    /// Test relative error needs at least two test projects.
    pub fn test_re_defined(&self) -> bool {
        self.test_record_ids.len() >= 2
    }
}

pub fn make_splits(dataset: &Dataset) -> Result<Vec<ChronoSplit>> {
    let needed = dataset.spec.min_training_size();
    let years = dataset.years();
    let count_in = |year: i32| {
        dataset
            .records
            .iter()
            .filter(|r| r.completion_year == year)
            .count()
    };

    let mut accumulated = 0;
    let mut first_test = None;
    for (i, &year) in years.iter().enumerate() {
        accumulated += count_in(year);
        if accumulated >= needed {
            first_test = Some(i + 1);
            break;
        }
    }
    let first_test = match first_test {
        Some(i) if i < years.len() => i,
        _ => return Err(Error::InsufficientData { needed }),
    };

    let splits = years[first_test..]
        .iter()
        .enumerate()
        .map(|(k, &test_year)| {
            let ids_where = |keep: &dyn Fn(&ProjectRecord) -> bool| -> Vec<String> {
                dataset
                    .records
                    .iter()
                    .filter(|r| keep(r))
                    .map(|r| r.id.clone())
                    .collect()
            };
            let last_training_year = years[first_test + k - 1];
            ChronoSplit {
                split_index: k + 1,
                training_record_ids: ids_where(&|r| r.completion_year < test_year),
                test_record_ids: ids_where(&|r| r.completion_year == test_year),
                excluded_test_ids: Vec::new(),
                training_span_years: dataset.year_index_of(last_training_year),
                target_year_index: dataset.year_index_of(test_year),
                test_year,
            }
        })
        .collect();
    Ok(splits)
}

/// Keeps only test projects that started after the last training project
/// was completed. Removed projects still join later training sets.
pub fn kitchenham_test_filter(split: &ChronoSplit, dataset: &Dataset) -> Result<ChronoSplit> {
    let training = dataset.select(&split.training_record_ids);
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let cutoff = training
        .iter()
        .map(|r| {
            r.completion_date()
                .ok_or_else(|| Error::MissingStartDate(r.id.clone()))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .expect("non-empty training set");

    let mut kept = Vec::new();
    let mut excluded = split.excluded_test_ids.clone();
    for record in dataset.select(&split.test_record_ids) {
        let start = record
            .start_date
            .ok_or_else(|| Error::MissingStartDate(record.id.clone()))?;
        if start > cutoff {
            kept.push(record.id.clone());
        } else {
            excluded.push(record.id.clone());
        }
    }
    Ok(ChronoSplit {
        test_record_ids: kept,
        excluded_test_ids: excluded,
        ..split.clone()
    })
}

/// Whether the start-date test filter applies: every record must carry a
/// start date and a duration.
pub fn has_project_dates(dataset: &Dataset) -> bool {
    dataset
        .records
        .iter()
        .all(|r| r.start_date.is_some() && r.duration_days.is_some())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalityMode {
    /// Log flags come from the model spec; tests are recorded only.
    #[default]
    PaperFixed,
    /// A variable is logged iff it fails the test.
    Strict,
}

impl NormalityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalityMode::PaperFixed => "paper_fixed",
            NormalityMode::Strict => "strict",
        }
    }
}

impl std::str::FromStr for NormalityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "paper_fixed" | "fixed" => Ok(NormalityMode::PaperFixed),
            "strict" => Ok(NormalityMode::Strict),
            other => Err(format!("unknown normality mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityCheck {
    pub variable: String,
    pub logged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<NormalityResult>,
    /// Re-test on the log scale, when the variable was logged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformed: Option<NormalityResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub plan: TransformPlan,
    pub checks: Vec<NormalityCheck>,
}

fn variable_values(records: &[&ProjectRecord], name: &str) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            r.numeric(name).ok_or_else(|| Error::MissingAttribute {
                id: r.id.clone(),
                term: name.into(),
            })
        })
        .collect()
}

fn log_values(values: &[f64]) -> Option<Vec<f64>> {
    values
        .iter()
        .map(|&v| if v > 0.0 { Some(v.ln()) } else { None })
        .collect()
}

pub fn normality_gate(
    training: &[&ProjectRecord],
    spec: &ModelSpec,
    mode: NormalityMode,
    alpha: f64,
) -> Result<GateOutcome> {
    let mut checks = Vec::new();
    match mode {
        NormalityMode::PaperFixed => {
            let plan = TransformPlan::from_spec(spec);
            for name in spec.numeric_variables() {
                let values = variable_values(training, name)?;
                let logged = plan.is_logged(name);
                let mut check = NormalityCheck {
                    variable: name.to_string(),
                    logged,
                    raw: None,
                    transformed: None,
                    note: None,
                };
                match shapiro_wilk(&values, alpha) {
                    Ok(r) => check.raw = Some(r),
                    Err(e) => check.note = Some(e.to_string()),
                }
                if logged {
                    if let Some(logs) = log_values(&values) {
                        check.transformed = shapiro_wilk(&logs, alpha).ok();
                    }
                }
                checks.push(check);
            }
            Ok(GateOutcome { plan, checks })
        }
        NormalityMode::Strict => {
            let mut logged = BTreeSet::new();
            for name in spec.numeric_variables() {
                let values = variable_values(training, name)?;
                let raw = shapiro_wilk(&values, alpha)?;
                let mut check = NormalityCheck {
                    variable: name.to_string(),
                    logged: false,
                    raw: Some(raw.clone()),
                    transformed: None,
                    note: None,
                };
                if raw.decision == Normality::NonNormal {
                    match log_values(&values) {
                        Some(logs) => {
                            check.transformed = Some(shapiro_wilk(&logs, alpha)?);
                            check.logged = true;
                            logged.insert(name.to_string());
                        }
                        None => {
                            check.note = Some("non-positive values; cannot log".into());
                        }
                    }
                }
                checks.push(check);
            }
            Ok(GateOutcome {
                plan: TransformPlan { logged },
                checks,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    NotWellFormed,
    RankDeficient,
    Failed,
}

/// Scores of the weighted model at one bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPoint {
    pub bandwidth: f64,
    pub status: PointStatus,
    pub n_effective: usize,
    pub re_train: Option<f64>,
    pub re_test: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: ChronoSplit,
    pub kernel: KernelType,
    pub points: Vec<BandwidthPoint>,
    pub re_train_global: Option<f64>,
    pub re_test_global: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub global_coefficients: Vec<f64>,
    pub column_names: Vec<String>,
    pub transform_plan: TransformPlan,
    pub normality: Vec<NormalityCheck>,
    /// Test projects with a level unseen in training.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_test_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_error: Option<String>,
}

impl SplitResult {
    pub fn bandwidths(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.bandwidth).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub mode: NormalityMode,
    pub alpha: f64,
    pub keep_coefficients: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            mode: NormalityMode::PaperFixed,
            alpha: crate::stats::DEFAULT_ALPHA,
            keep_coefficients: false,
        }
    }
}

struct Scorer<'a> {
    training: Vec<&'a ProjectRecord>,
    test: Vec<&'a ProjectRecord>,
    spec: ModelSpec,
    plan: TransformPlan,
    training_effort: Vec<f64>,
    test_defined: bool,
}

impl Scorer<'_> {
    /// In-sample and test relative error, both unweighted and on the
    /// natural scale. Returns test projects that could not be scored.
    fn score(&self, fit: &FitResult) -> Result<(Option<f64>, Option<f64>, Vec<String>)> {
        let train_pred = predict(fit, &self.training, &self.spec, &self.plan)?;
        let re_train = relative_error(&train_pred.predicted(), &self.training_effort).ok();
        if !self.test_defined {
            return Ok((re_train, None, Vec::new()));
        }
        let test_pred = predict(fit, &self.test, &self.spec, &self.plan)?;
        let measured: Vec<f64> = test_pred
            .values
            .iter()
            .map(|(id, _)| {
                self.test
                    .iter()
                    .find(|r| &r.id == id)
                    .map(|r| r.effort)
                    .expect("predicted record is a test record")
            })
            .collect();
        let re_test = relative_error(&test_pred.predicted(), &measured).ok();
        Ok((re_train, re_test, test_pred.skipped))
    }
}

/// Fits the uniform baseline once and the weighted model at every bandwidth.
pub fn run_split(
    dataset: &Dataset,
    split: &ChronoSplit,
    kernel: KernelType,
    bandwidths: &[f64],
    options: &SplitOptions,
) -> Result<SplitResult> {
    let training = dataset.select(&split.training_record_ids);
    let test = dataset.select(&split.test_record_ids);
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let gate = normality_gate(&training, &dataset.spec, options.mode, options.alpha)?;
    let spec = dataset.spec.restricted_to(&training);
    let design = build_design(&training, &spec, &gate.plan)?;
    let scorer = Scorer {
        training_effort: training.iter().map(|r| r.effort).collect(),
        test_defined: split.test_re_defined(),
        training,
        test,
        spec,
        plan: gate.plan.clone(),
    };

    let mut skipped_test_ids = Vec::new();
    let (re_train_global, re_test_global, global_coefficients, baseline_error) =
        match fit_ols(&design) {
            Ok(fit) if fit.converged => {
                let (tr, te, skipped) = scorer.score(&fit)?;
                skipped_test_ids = skipped;
                let coefs = if options.keep_coefficients {
                    fit.coefficients.clone()
                } else {
                    Vec::new()
                };
                (tr, te, coefs, None)
            }
            Ok(fit) => (
                None,
                None,
                Vec::new(),
                Some(format!("dependent columns {:?}", fit.dropped_columns)),
            ),
            Err(e) => (None, None, Vec::new(), Some(e.to_string())),
        };

    let points = bandwidths
        .iter()
        .map(|&b| {
            let weights =
                weights_for_target(dataset, &scorer.training, kernel, b, split.target_year_index)?;
            Ok(match fit_wls(&design, &weights) {
                Ok(fit) if fit.converged => {
                    let (re_train, re_test, _) = scorer.score(&fit)?;
                    BandwidthPoint {
                        bandwidth: b,
                        status: PointStatus::Ok,
                        n_effective: fit.n_effective,
                        re_train,
                        re_test,
                        coefficients: if options.keep_coefficients {
                            fit.coefficients
                        } else {
                            Vec::new()
                        },
                    }
                }
                Ok(fit) => BandwidthPoint {
                    bandwidth: b,
                    status: PointStatus::RankDeficient,
                    n_effective: fit.n_effective,
                    re_train: None,
                    re_test: None,
                    coefficients: Vec::new(),
                },
                Err(Error::NotWellFormed { n_effective, .. }) => BandwidthPoint {
                    bandwidth: b,
                    status: PointStatus::NotWellFormed,
                    n_effective,
                    re_train: None,
                    re_test: None,
                    coefficients: Vec::new(),
                },
                Err(_) => BandwidthPoint {
                    bandwidth: b,
                    status: PointStatus::Failed,
                    n_effective: 0,
                    re_train: None,
                    re_test: None,
                    coefficients: Vec::new(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SplitResult {
        split: split.clone(),
        kernel,
        points,
        re_train_global,
        re_test_global,
        global_coefficients,
        column_names: design.column_names.clone(),
        transform_plan: gate.plan,
        normality: gate.checks,
        skipped_test_ids,
        baseline_error,
    })
}

/// CSV rows `split,kernel,bandwidth,re_train,re_test,re_train_global,re_test_global`;
/// undefined values are empty fields.
pub fn split_results_csv(results: &[SplitResult]) -> String {
    fn cell(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out =
        String::from("split,kernel,bandwidth,re_train,re_test,re_train_global,re_test_global\n");
    for r in results {
        for p in &r.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.split.split_index,
                r.kernel,
                p.bandwidth,
                cell(p.re_train),
                cell(p.re_test),
                cell(r.re_train_global),
                cell(r.re_test_global),
            ));
        }
    }
    out
}
