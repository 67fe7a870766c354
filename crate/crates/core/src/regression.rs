//! Design matrices, weighted least squares and back-transformed prediction.
//!
//! The weighted problem is solved by scaling each row by `sqrt(w)` and
//! factoring the scaled system with Householder reflections, so tiny kernel
//! weights never pass through squared normal equations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{ModelSpec, ProjectRecord, Term};
use crate::error::{Error, Result};
use crate::kernel::WeightAssignment;

/// Weights below this count as zero when counting effective observations.
pub const MIN_EFFECTIVE_WEIGHT: f64 = 1e-12;

/// Relative tolerance for declaring a scaled column linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Names of the numeric variables (response included) that enter the model
/// on the log scale.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformPlan {
    pub logged: BTreeSet<String>,
}

impl TransformPlan {
    pub fn is_logged(&self, name: &str) -> bool {
        self.logged.contains(name)
    }

    /// The log flags declared by the spec itself.
    pub fn from_spec(spec: &ModelSpec) -> Self {
        let mut logged = BTreeSet::new();
        if spec.response.log_transform {
            logged.insert(spec.response.name.clone());
        }
        for term in &spec.terms {
            if let Term::Numeric {
                name,
                log_transform: true,
            } = term
            {
                logged.insert(name.clone());
            }
        }
        TransformPlan { logged }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    /// Row-major, intercept first.
    pub rows: Vec<Vec<f64>>,
    pub response: Vec<f64>,
    pub row_record_ids: Vec<String>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    /// CSV dump with the record id, response and every column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("record_id,response");
        for name in &self.column_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for ((id, y), row) in self.row_record_ids.iter().zip(&self.response).zip(&self.rows) {
            out.push_str(id);
            out.push_str(&format!(",{y}"));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn column_names(spec: &ModelSpec, plan: &TransformPlan) -> Vec<String> {
    let mut names = vec!["intercept".to_string()];
    for term in &spec.terms {
        match term {
            Term::Numeric { name, .. } => {
                if plan.is_logged(name) {
                    names.push(format!("ln_{name}"));
                } else {
                    names.push(name.clone());
                }
            }
            Term::Categorical {
                name,
                reference_level,
                levels,
            } => {
                for level in levels.iter().filter(|l| *l != reference_level) {
                    names.push(format!("{name}={level}"));
                }
            }
        }
    }
    names
}

fn transformed(value: f64, logged: bool, id: &str, name: &str) -> Result<f64> {
    if !logged {
        return Ok(value);
    }
    if value > 0.0 {
        Ok(value.ln())
    } else {
        Err(Error::NonPositiveValue {
            row: 0,
            column: format!("{name} (record {id})"),
            value,
        })
    }
}

/// Predictor row for one record. An unknown level yields `UnknownLevel`.
fn design_row(record: &ProjectRecord, spec: &ModelSpec, plan: &TransformPlan) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(1 + spec.explanatory_count());
    row.push(1.0);
    for term in &spec.terms {
        match term {
            Term::Numeric { name, .. } => {
                let value = record.numeric(name).ok_or_else(|| Error::MissingAttribute {
                    id: record.id.clone(),
                    term: name.clone(),
                })?;
                row.push(transformed(value, plan.is_logged(name), &record.id, name)?);
            }
            Term::Categorical {
                name,
                reference_level,
                levels,
            } => {
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
                for l in levels.iter().filter(|l| *l != reference_level) {
                    row.push(if l == level { 1.0 } else { 0.0 });
                }
            }
        }
    }
    Ok(row)
}

pub fn build_design(
    records: &[&ProjectRecord],
    spec: &ModelSpec,
    plan: &TransformPlan,
) -> Result<DesignMatrix> {
    let response_name = spec.response.name.as_str();
    let log_response = plan.is_logged(response_name);
    let mut rows = Vec::with_capacity(records.len());
    let mut response = Vec::with_capacity(records.len());
    for record in records {
        rows.push(design_row(record, spec, plan)?);
        let y = record
            .numeric(response_name)
            .ok_or_else(|| Error::MissingAttribute {
                id: record.id.clone(),
                term: response_name.into(),
            })?;
        response.push(transformed(y, log_response, &record.id, response_name)?);
    }
    Ok(DesignMatrix {
        column_names: column_names(spec, plan),
        rows,
        response,
        row_record_ids: records.iter().map(|r| r.id.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub n_effective: usize,
    /// Explanatory columns, intercept excluded.
    pub p: usize,
    /// `y - X beta` for every design row, on the response's fitted scale.
    pub residuals_log_scale: Vec<f64>,
    /// False when a dependent column had to be dropped.
    pub converged: bool,
    pub dropped_columns: Vec<String>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .map(|i| self.coefficients[i])
    }

    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

/// Weighted fit with weights taken from `assignment` by record id.
pub fn fit_wls(design: &DesignMatrix, assignment: &WeightAssignment) -> Result<FitResult> {
    let weights: Vec<f64> = design
        .row_record_ids
        .iter()
        .map(|id| assignment.weight(id).unwrap_or(0.0))
        .collect();
    fit_weighted(design, &weights)
}

/// Ordinary least squares: every weight equal to one.
pub fn fit_ols(design: &DesignMatrix) -> Result<FitResult> {
    fit_weighted(design, &vec![1.0; design.n_rows()])
}

/// Minimises `sum w_i (y_i - x_i' beta)^2`.
///
/// Dependent columns are dropped in column order (the later column of a
/// dependent pair goes), their coefficients set to zero and `converged`
/// cleared.
pub fn fit_weighted(design: &DesignMatrix, weights: &[f64]) -> Result<FitResult> {
    if weights.len() != design.n_rows() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: design.n_rows(),
        });
    }
    let p = design.n_cols().saturating_sub(1);
    let active: Vec<usize> = (0..design.n_rows())
        .filter(|&i| weights[i] >= MIN_EFFECTIVE_WEIGHT)
        .collect();
    let n_effective = active.len();
    if n_effective < p + 2 {
        return Err(Error::NotWellFormed { n_effective, p });
    }

    let cols = design.n_cols();
    // Column-major scaled system for cache-friendly reflections.
    let mut a: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            active
                .iter()
                .map(|&i| weights[i].sqrt() * design.rows[i][j])
                .collect()
        })
        .collect();
    let mut b: Vec<f64> = active
        .iter()
        .map(|&i| weights[i].sqrt() * design.response[i])
        .collect();

    let (kept, r) = householder_qr(&mut a, &mut b);
    if kept.is_empty() {
        return Err(Error::RankDeficient);
    }

    // Back substitution on the kept columns.
    let k = kept.len();
    let mut beta_kept = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = b[row];
        for col in row + 1..k {
            acc -= r[row][col] * beta_kept[col];
        }
        beta_kept[row] = acc / r[row][row];
    }
    let mut coefficients = vec![0.0; cols];
    for (slot, &j) in kept.iter().enumerate() {
        coefficients[j] = beta_kept[slot];
    }
    let dropped_columns: Vec<String> = (0..cols)
        .filter(|j| !kept.contains(j))
        .map(|j| design.column_names[j].clone())
        .collect();

    let residuals_log_scale = design
        .rows
        .iter()
        .zip(&design.response)
        .map(|(row, y)| y - row.iter().zip(&coefficients).map(|(x, c)| x * c).sum::<f64>())
        .collect();

    Ok(FitResult {
        column_names: design.column_names.clone(),
        coefficients,
        n_effective,
        p,
        residuals_log_scale,
        converged: dropped_columns.is_empty(),
        dropped_columns,
    })
}

/// In-place Householder QR of the column-major matrix `a`, also applying
/// the reflections to `b`. Returns the kept column indices and the upper
/// triangle `r[row][slot]` over kept columns.
fn householder_qr(a: &mut [Vec<f64>], b: &mut [f64]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let m = b.len();
    let cols = a.len();
    let original_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut kept = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::new();

    for j in 0..cols {
        let k = kept.len();
        if k >= m {
            break;
        }
        let tail_norm = norm(&a[j][k..]);
        if original_norms[j] == 0.0 || tail_norm <= RANK_TOLERANCE * original_norms[j] {
            continue;
        }
        let alpha = if a[j][k] > 0.0 { -tail_norm } else { tail_norm };
        let mut v: Vec<f64> = a[j][k..].to_vec();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();

        if v_norm_sq > 0.0 {
            for col in a.iter_mut().skip(j + 1) {
                reflect(&v, v_norm_sq, &mut col[k..]);
            }
            reflect(&v, v_norm_sq, &mut b[k..]);
        }
        a[j][k] = alpha;
        for x in a[j][k + 1..].iter_mut() {
            *x = 0.0;
        }
        kept.push(j);
        r_cols.push(Vec::new());
    }

    let k = kept.len();
    let mut r = vec![vec![0.0; k]; k];
    for (slot, &j) in kept.iter().enumerate() {
        for row in 0..=slot {
            r[row][slot] = a[j][row];
        }
    }
    (kept, r)
}

fn reflect(v: &[f64], v_norm_sq: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let scale = 2.0 * dot / v_norm_sq;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= scale * vi;
    }
}

fn norm(x: &[f64]) -> f64 {
    // Scaled to avoid underflow when weights are tiny.
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    max * x.iter().map(|v| (v / max) * (v / max)).sum::<f64>().sqrt()
}

/// Back-transformed predictions and the records that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub values: Vec<(String, f64)>,
    /// Records whose categorical level was not part of the training design.
    pub skipped: Vec<String>,
}

impl Predictions {
    pub fn predicted(&self) -> Vec<f64> {
        self.values.iter().map(|(_, v)| *v).collect()
    }
}

/// Predicts efforts in natural units. `spec` must be the spec the fit was
/// built with.
pub fn predict(
    fit: &FitResult,
    records: &[&ProjectRecord],
    spec: &ModelSpec,
    plan: &TransformPlan,
) -> Result<Predictions> {
    let log_response = plan.is_logged(&spec.response.name);
    let mut values = Vec::with_capacity(records.len());
    let mut skipped = Vec::new();
    for record in records {
        match design_row(record, spec, plan) {
            Ok(row) => {
                let eta = fit.linear_predictor(&row);
                let y = if log_response { eta.exp() } else { eta };
                values.push((record.id.clone(), y));
            }
            Err(Error::UnknownLevel { .. }) => skipped.push(record.id.clone()),
            Err(e) => return Err(e),
        }
    }
    Ok(Predictions { values, skipped })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rec(id: &str, effort: f64, size: f64, lang: &str) -> ProjectRecord {
        ProjectRecord {
            id: id.into(),
            completion_year: 2000,
            start_date: None,
            duration_days: None,
            effort,
            size,
            categoricals: BTreeMap::from([("language".to_string(), lang.to_string())]),
            numerics: BTreeMap::new(),
        }
    }

    fn lang_spec() -> ModelSpec {
        ModelSpec::log_effort(vec![
            Term::Numeric {
                name: "size".into(),
                log_transform: true,
            },
            Term::Categorical {
                name: "language".into(),
                reference_level: "1".into(),
                levels: vec!["1".into(), "2".into(), "3".into()],
            },
        ])
    }

    fn design_from(xs: &[f64], ys: &[f64]) -> DesignMatrix {
        DesignMatrix {
            column_names: vec!["intercept".into(), "x".into()],
            rows: xs.iter().map(|x| vec![1.0, *x]).collect(),
            response: ys.to_vec(),
            row_record_ids: (0..xs.len()).map(|i| i.to_string()).collect(),
        }
    }

    #[test]
    fn reference_level_has_zero_dummies() {
        let spec = lang_spec();
        let plan = TransformPlan::from_spec(&spec);
        let records = [rec("a", 10.0, 5.0, "1"), rec("b", 10.0, 5.0, "3"), rec("c", 3.0, 2.0, "2")];
        let refs: Vec<&ProjectRecord> = records.iter().collect();
        let d = build_design(&refs, &spec, &plan).unwrap();
        assert_eq!((d.n_rows(), d.n_cols()), (3, 4));
        assert_eq!(
            d.column_names,
            vec!["intercept", "ln_size", "language=2", "language=3"]
        );
        assert_eq!(&d.rows[0][2..], &[0.0, 0.0]);
        assert_eq!(&d.rows[1][2..], &[0.0, 1.0]);
        assert_abs_diff_eq!(d.response[0], 10f64.ln());
    }

    #[test]
    fn unknown_level_is_rejected() {
        let spec = lang_spec();
        let plan = TransformPlan::from_spec(&spec);
        let r = rec("a", 1.0, 1.0, "7");
        assert!(matches!(
            build_design(&[&r], &spec, &plan),
            Err(Error::UnknownLevel { .. })
        ));
    }

    #[test]
    fn exact_line_recovered_under_any_weights() {
        let xs = [0.0, 1.0, 2.5, 4.0, 7.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x).collect();
        let d = design_from(&xs, &ys);
        let fit = fit_weighted(&d, &[0.3, 1e-6, 0.9, 0.05, 1.0]).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coefficients[1], 3.0, epsilon = 1e-10);
        assert!(fit.converged);
    }

    #[test]
    fn not_well_formed_when_too_few_weighted_rows() {
        let d = design_from(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 2.0, 5.0]);
        let err = fit_weighted(&d, &[1.0, 1.0, 0.0, 1e-13]).unwrap_err();
        assert_eq!(err, Error::NotWellFormed { n_effective: 2, p: 1 });
    }

    #[test]
    fn dependent_column_is_dropped() {
        let d = DesignMatrix {
            column_names: vec!["intercept".into(), "x".into(), "x2".into()],
            rows: (0..6).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect(),
            response: (0..6).map(|i| 1.0 + i as f64).collect(),
            row_record_ids: (0..6).map(|i| i.to_string()).collect(),
        };
        let fit = fit_ols(&d).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.dropped_columns, vec!["x2"]);
        assert_abs_diff_eq!(fit.coefficients[1], 1.0, epsilon = 1e-10);
        assert_eq!(fit.coefficients[2], 0.0);
    }

    #[test]
    fn prediction_with_identity_coefficients_returns_size() {
        let spec = ModelSpec::log_effort(vec![Term::Numeric {
            name: "size".into(),
            log_transform: true,
        }]);
        let plan = TransformPlan::from_spec(&spec);
        let fit = FitResult {
            column_names: vec!["intercept".into(), "ln_size".into()],
            coefficients: vec![0.0, 1.0],
            n_effective: 3,
            p: 1,
            residuals_log_scale: vec![],
            converged: true,
            dropped_columns: vec![],
        };
        let r = rec("a", 1.0, 123.0, "1");
        let out = predict(&fit, &[&r], &spec, &plan).unwrap();
        assert_abs_diff_eq!(out.values[0].1, 123.0, epsilon = 1e-10);
    }

    #[test]
    fn unseen_levels_are_skipped() {
        let spec = lang_spec();
        let plan = TransformPlan::from_spec(&spec);
        let train = [rec("a", 10.0, 5.0, "1"), rec("b", 20.0, 9.0, "1"), rec("c", 14.0, 6.0, "1")];
        let refs: Vec<&ProjectRecord> = train.iter().collect();
        let restricted = spec.restricted_to(&refs);
        let d = build_design(&refs, &restricted, &plan).unwrap();
        let fit = fit_ols(&d).unwrap();
        let test = [rec("x", 5.0, 3.0, "2"), rec("y", 5.0, 3.0, "1")];
        let trefs: Vec<&ProjectRecord> = test.iter().collect();
        let out = predict(&fit, &trefs, &restricted, &plan).unwrap();
        assert_eq!(out.skipped, vec!["x"]);
        assert_eq!(out.values.len(), 1);
    }

    #[test]
    fn exact_fit_predicts_training_efforts() {
        let spec = ModelSpec::log_effort(vec![Term::Numeric {
            name: "size".into(),
            log_transform: true,
        }]);
        let plan = TransformPlan::from_spec(&spec);
        // effort = 3 * size^1.2
        let train: Vec<ProjectRecord> = [2.0, 5.0, 11.0, 40.0]
            .iter()
            .enumerate()
            .map(|(i, s)| rec(&i.to_string(), 3.0 * f64::powf(*s, 1.2), *s, "1"))
            .collect();
        let refs: Vec<&ProjectRecord> = train.iter().collect();
        let d = build_design(&refs, &spec, &plan).unwrap();
        let fit = fit_weighted(&d, &[1.0, 0.5, 0.25, 0.125]).unwrap();
        let out = predict(&fit, &refs, &spec, &plan).unwrap();
        for (r, (_, y)) in train.iter().zip(&out.values) {
            assert!(((y - r.effort) / r.effort).abs() < 1e-9);
        }
    }

    fn system() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
        (6usize..20).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), n),
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(0.01f64..1.0, n),
            )
        })
    }

    fn design_of(xs: &[Vec<f64>], ys: &[f64]) -> DesignMatrix {
        DesignMatrix {
            column_names: vec!["intercept".into(), "a".into(), "b".into()],
            rows: xs.iter().map(|r| vec![1.0, r[0], r[1]]).collect(),
            response: ys.to_vec(),
            row_record_ids: (0..xs.len()).map(|i| i.to_string()).collect(),
        }
    }

    proptest! {
        #[test]
        fn weight_scaling_leaves_coefficients((xs, ys, ws) in system(), c in 0.01f64..100.0) {
            let d = design_of(&xs, &ys);
            let a = fit_weighted(&d, &ws).unwrap();
            let scaled: Vec<f64> = ws.iter().map(|w| w * c).collect();
            let b = fit_weighted(&d, &scaled).unwrap();
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
            }
        }

        #[test]
        fn weighted_residuals_are_orthogonal((xs, ys, ws) in system()) {
            let d = design_of(&xs, &ys);
            let fit = fit_weighted(&d, &ws).unwrap();
            for j in 0..3 {
                let s: f64 = (0..d.n_rows())
                    .map(|i| ws[i] * fit.residuals_log_scale[i] * d.rows[i][j])
                    .sum();
                prop_assert!(s.abs() < 1e-8);
            }
        }

        #[test]
        fn zero_weight_rows_have_no_influence((xs, ys, ws) in system(), junk in -100f64..100.0) {
            let d = design_of(&xs, &ys);
            let base = fit_weighted(&d, &ws).unwrap();
            let mut xs2 = xs.clone();
            let mut ys2 = ys.clone();
            let mut ws2 = ws.clone();
            xs2.push(vec![junk, -junk]);
            ys2.push(junk * 3.0);
            ws2.push(0.0);
            let with_zero = fit_weighted(&design_of(&xs2, &ys2), &ws2).unwrap();
            for (x, y) in base.coefficients.iter().zip(&with_zero.coefficients) {
                prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
            }
        }
    }
}
