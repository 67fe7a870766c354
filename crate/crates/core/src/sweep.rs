//! Convergence of weighted models onto the uniform baseline, and the
//! stationarity verdicts derived from it.
//!
//! For each bandwidth the gap is the relative distance between the weighted
//! model's training error and the uniform model's. The convergence bandwidth
//! `b*` is the first grid point after which every defined gap stays within
//! `epsilon`. The kernel's decay horizon at `b*` converts it to elapsed
//! years; a split is stationary when that horizon fits inside its training
//! span, or when weighting never moved the error by more than `epsilon`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chronology::{PointStatus, SplitResult};
use crate::error::{Error, Result};
use crate::kernel::{decay_horizon, KernelType, DEFAULT_KAPPA};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_GAP_FLOOR: f64 = 0.01;

/// The default grid: integer bandwidths 1 through 100.
pub fn default_grid() -> Vec<f64> {
    (1..=100).map(f64::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub dataset: String,
    pub kernel: KernelType,
    pub split_index: usize,
    pub bandwidths: Vec<f64>,
    pub re_train: Vec<Option<f64>>,
    pub re_test: Vec<Option<f64>>,
    pub re_train_global: Option<f64>,
    pub re_test_global: Option<f64>,
    pub training_span_years: i32,
    /// False when the test year has fewer than two projects.
    pub test_defined: bool,
}

impl SweepCurve {
    pub fn from_result(dataset: &str, result: &SplitResult) -> Self {
        let ok = |v: Option<f64>, status: PointStatus| {
            if status == PointStatus::Ok {
                v
            } else {
                None
            }
        };
        SweepCurve {
            dataset: dataset.to_string(),
            kernel: result.kernel,
            split_index: result.split.split_index,
            bandwidths: result.bandwidths(),
            re_train: result.points.iter().map(|p| ok(p.re_train, p.status)).collect(),
            re_test: result.points.iter().map(|p| ok(p.re_test, p.status)).collect(),
            re_train_global: result.re_train_global,
            re_test_global: result.re_test_global,
            training_span_years: result.split.training_span_years,
            test_defined: result.split.test_re_defined(),
        }
    }

    fn position(&self, b: f64) -> Option<usize> {
        self.bandwidths.iter().position(|&x| x == b)
    }

    /// Gaps at every grid point; `None` where undefined.
    pub fn gaps(&self, floor: f64) -> Vec<Option<f64>> {
        self.re_train
            .iter()
            .map(|re| match (re, self.re_train_global) {
                (Some(re), Some(global)) => Some(gap_value(*re, global, floor)),
                _ => None,
            })
            .collect()
    }

    pub fn defined_fraction(&self) -> f64 {
        if self.bandwidths.is_empty() {
            return 0.0;
        }
        let defined = self.gaps(DEFAULT_GAP_FLOOR).iter().flatten().count();
        defined as f64 / self.bandwidths.len() as f64
    }
}

fn gap_value(re: f64, global: f64, floor: f64) -> f64 {
    (re - global).abs() / global.max(floor)
}

/// `|re_train(b) - re_train_global| / max(re_train_global, floor)`.
pub fn gap(curve: &SweepCurve, bandwidth: f64, floor: f64) -> Result<f64> {
    let i = curve
        .position(bandwidth)
        .ok_or(Error::UndefinedPoint(bandwidth))?;
    curve.gaps(floor)[i].ok_or(Error::UndefinedPoint(bandwidth))
}

/// Smallest grid bandwidth from which every defined gap is within `epsilon`.
pub fn convergence_bandwidth(curve: &SweepCurve, epsilon: f64, floor: f64) -> Result<Option<f64>> {
    let gaps = curve.gaps(floor);
    let defined = gaps.iter().flatten().count();
    if 2 * defined < gaps.len() || defined == 0 {
        return Err(Error::TooManyUndefined {
            defined,
            total: gaps.len(),
        });
    }
    let mut b_star = None;
    let mut witnessed = false;
    for (i, g) in gaps.iter().enumerate().rev() {
        match g {
            Some(g) if *g > epsilon => break,
            Some(_) => {
                witnessed = true;
                b_star = Some(curve.bandwidths[i]);
            }
            None => b_star = Some(curve.bandwidths[i]),
        }
    }
    Ok(b_star.filter(|_| witnessed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub epsilon: f64,
    pub kappa: f64,
    /// Denominator floor of the gap; 0 disables it.
    pub gap_floor: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epsilon: DEFAULT_EPSILON,
            kappa: DEFAULT_KAPPA,
            gap_floor: DEFAULT_GAP_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stationary,
    NonStationary,
    Undetermined,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Stationary => "stationary",
            Classification::NonStationary => "non_stationary",
            Classification::Undetermined => "undetermined",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityVerdict {
    pub dataset: String,
    pub kernel: KernelType,
    #[serde(rename = "split")]
    pub split_index: usize,
    pub classification: Classification,
    pub b_star: Option<f64>,
    pub decay_horizon: Option<f64>,
    #[serde(rename = "span")]
    pub training_span_years: i32,
    pub max_gap: Option<f64>,
    pub epsilon: f64,
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

pub fn classify(curve: &SweepCurve, config: &ClassifierConfig) -> StationarityVerdict {
    let mut verdict = StationarityVerdict {
        dataset: curve.dataset.clone(),
        kernel: curve.kernel,
        split_index: curve.split_index,
        classification: Classification::Undetermined,
        b_star: None,
        decay_horizon: None,
        training_span_years: curve.training_span_years,
        max_gap: None,
        epsilon: config.epsilon,
        kappa: config.kappa,
        reason: None,
    };
    if !curve.test_defined {
        verdict.reason = Some("test year has fewer than two projects".into());
        return verdict;
    }
    if curve.re_train_global.is_none() {
        verdict.reason = Some("uniform baseline undefined".into());
        return verdict;
    }
    let gaps = curve.gaps(config.gap_floor);
    verdict.max_gap = gaps.iter().flatten().copied().reduce(f64::max);
    let b_star = match convergence_bandwidth(curve, config.epsilon, config.gap_floor) {
        Ok(b) => b,
        Err(e) => {
            verdict.reason = Some(e.to_string());
            return verdict;
        }
    };
    verdict.b_star = b_star;
    let horizon = |b: f64| {
        decay_horizon(curve.kernel, b, config.kappa)
            .ok()
            .filter(|y| y.is_finite())
    };

    let max_gap = verdict.max_gap.unwrap_or(0.0);
    if max_gap <= config.epsilon {
        verdict.classification = Classification::Stationary;
        verdict.decay_horizon = b_star.and_then(horizon);
        verdict.reason = Some("weighting never moved the training error beyond epsilon".into());
        return verdict;
    }
    match b_star {
        None => {
            verdict.classification = Classification::NonStationary;
            verdict.reason = Some("no convergence within the grid".into());
        }
        Some(b) => {
            let y = decay_horizon(curve.kernel, b, config.kappa).unwrap_or(f64::INFINITY);
            verdict.decay_horizon = Some(y).filter(|y| y.is_finite());
            verdict.classification = if y <= f64::from(curve.training_span_years) {
                Classification::Stationary
            } else {
                Classification::NonStationary
            };
        }
    }
    verdict
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAgreement {
    pub split: usize,
    pub verdicts: BTreeMap<KernelType, Classification>,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kernels: Vec<KernelType>,
    pub splits: Vec<SplitAgreement>,
    pub fraction: f64,
}

/// Per-split agreement across the non-uniform kernels present in `verdicts`.
pub fn kernel_agreement(verdicts: &[StationarityVerdict]) -> AgreementReport {
    let mut by_split: BTreeMap<usize, BTreeMap<KernelType, Classification>> = BTreeMap::new();
    for v in verdicts.iter().filter(|v| v.kernel != KernelType::Uniform) {
        by_split
            .entry(v.split_index)
            .or_default()
            .insert(v.kernel, v.classification);
    }
    let mut kernels: Vec<KernelType> = verdicts
        .iter()
        .map(|v| v.kernel)
        .filter(|k| *k != KernelType::Uniform)
        .collect();
    kernels.sort();
    kernels.dedup();

    let splits: Vec<SplitAgreement> = by_split
        .into_iter()
        .map(|(split, verdicts)| {
            let mut values = verdicts.values();
            let first = values.next().copied();
            let agree = values.all(|c| Some(*c) == first);
            SplitAgreement {
                split,
                verdicts,
                agree,
            }
        })
        .collect();
    let fraction = if splits.is_empty() {
        1.0
    } else {
        splits.iter().filter(|s| s.agree).count() as f64 / splits.len() as f64
    };
    AgreementReport {
        kernels,
        splits,
        fraction,
    }
}

/// Fraction of splits on which two kernels give the same verdict.
pub fn pairwise_agreement(verdicts: &[StationarityVerdict], a: KernelType, b: KernelType) -> f64 {
    let of = |k: KernelType| -> BTreeMap<usize, Classification> {
        verdicts
            .iter()
            .filter(|v| v.kernel == k)
            .map(|v| (v.split_index, v.classification))
            .collect()
    };
    let (va, vb) = (of(a), of(b));
    let shared: Vec<usize> = va.keys().filter(|s| vb.contains_key(s)).copied().collect();
    if shared.is_empty() {
        return 1.0;
    }
    shared.iter().filter(|s| va[s] == vb[s]).count() as f64 / shared.len() as f64
}

/// Dataset-level reading for one kernel: the majority of decided splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetVerdict {
    pub dataset: String,
    pub kernel: KernelType,
    pub stationary: usize,
    pub non_stationary: usize,
    pub undetermined: usize,
    pub classification: Classification,
}

pub fn dataset_verdict(verdicts: &[StationarityVerdict], kernel: KernelType) -> Option<DatasetVerdict> {
    let mine: Vec<&StationarityVerdict> = verdicts.iter().filter(|v| v.kernel == kernel).collect();
    let first = mine.first()?;
    let count = |c: Classification| mine.iter().filter(|v| v.classification == c).count();
    let stationary = count(Classification::Stationary);
    let non_stationary = count(Classification::NonStationary);
    let classification = match stationary.cmp(&non_stationary) {
        std::cmp::Ordering::Greater => Classification::Stationary,
        std::cmp::Ordering::Less => Classification::NonStationary,
        std::cmp::Ordering::Equal => Classification::Undetermined,
    };
    Some(DatasetVerdict {
        dataset: first.dataset.clone(),
        kernel,
        stationary,
        non_stationary,
        undetermined: count(Classification::Undetermined),
        classification,
    })
}

/// JSON array of verdicts.
pub fn verdicts_json(verdicts: &[StationarityVerdict]) -> Result<String> {
    serde_json::to_string_pretty(verdicts).map_err(|e| Error::Serialization(e.to_string()))
}

/// Fixed-width table, one verdict per line.
pub fn verdict_table(verdicts: &[StationarityVerdict]) -> String {
    let width = verdicts
        .iter()
        .map(|v| v.dataset.len())
        .chain(std::iter::once(7))
        .max()
        .unwrap_or(7);
    let mut out = format!(
        "{:<width$} {:<13} {:>5} {:>5} {:<15} {:>7} {:>9} {:>9}\n",
        "dataset", "kernel", "split", "span", "verdict", "b*", "horizon", "max_gap"
    );
    let opt = |v: Option<f64>, prec: usize| match v {
        Some(x) => format!("{x:.prec$}"),
        None => "-".to_string(),
    };
    for v in verdicts {
        out.push_str(&format!(
            "{:<width$} {:<13} {:>5} {:>5} {:<15} {:>7} {:>9} {:>9}\n",
            v.dataset,
            v.kernel.as_str(),
            v.split_index,
            v.training_span_years,
            v.classification.as_str(),
            opt(v.b_star, 0),
            opt(v.decay_horizon, 2),
            opt(v.max_gap, 4),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn curve_from_gaps(gaps: &[Option<f64>], span: i32, kernel: KernelType) -> SweepCurve {
        SweepCurve {
            dataset: "synthetic".into(),
            kernel,
            split_index: 1,
            bandwidths: (1..=gaps.len()).map(|b| b as f64).collect(),
            re_train: gaps.iter().map(|g| g.map(|g| 1.0 + g)).collect(),
            re_test: vec![None; gaps.len()],
            re_train_global: Some(1.0),
            re_test_global: Some(1.0),
            training_span_years: span,
            test_defined: true,
        }
    }

    #[test]
    fn gap_examples() {
        let mut c = curve_from_gaps(&[Some(0.0), Some(0.2)], 5, KernelType::Gaussian);
        assert_eq!(gap(&c, 1.0, DEFAULT_GAP_FLOOR).unwrap(), 0.0);
        assert!((gap(&c, 2.0, DEFAULT_GAP_FLOOR).unwrap() - 0.2).abs() < 1e-12);
        c.re_train_global = Some(0.001);
        c.re_train[0] = Some(0.003);
        assert!((gap(&c, 1.0, DEFAULT_GAP_FLOOR).unwrap() - 0.2).abs() < 1e-12);
        c.re_train[1] = None;
        assert_eq!(gap(&c, 2.0, 0.01), Err(Error::UndefinedPoint(2.0)));
    }

    #[test]
    fn convergence_for_reciprocal_gap() {
        let gaps: Vec<Option<f64>> = (1..=100).map(|b| Some(1.0 / b as f64)).collect();
        let c = curve_from_gaps(&gaps, 5, KernelType::Gaussian);
        assert_eq!(convergence_bandwidth(&c, 0.0501, 0.01).unwrap(), Some(20.0));
    }

    #[test]
    fn flat_curve_is_stationary_from_first_bandwidth() {
        let c = curve_from_gaps(&vec![Some(0.0); 100], 3, KernelType::Gaussian);
        let v = classify(&c, &ClassifierConfig::default());
        assert_eq!(v.classification, Classification::Stationary);
        assert_eq!(v.b_star, Some(1.0));
        assert_eq!(v.max_gap, Some(0.0));
    }

    #[test]
    fn late_convergence_on_short_span_is_non_stationary() {
        // converges at b = 5; Gaussian horizon ~15.2 years > 7
        let gaps: Vec<Option<f64>> = (1..=100).map(|b| Some(if b < 5 { 0.5 } else { 0.01 })).collect();
        let v = classify(&curve_from_gaps(&gaps, 7, KernelType::Gaussian), &ClassifierConfig::default());
        assert_eq!(v.classification, Classification::NonStationary);
        assert_eq!(v.b_star, Some(5.0));
        assert!((v.decay_horizon.unwrap() - 15.17).abs() < 0.01);
        // long enough span
        let v = classify(&curve_from_gaps(&gaps, 16, KernelType::Gaussian), &ClassifierConfig::default());
        assert_eq!(v.classification, Classification::Stationary);
    }

    #[test]
    fn mostly_undefined_is_undetermined() {
        let gaps: Vec<Option<f64>> = (1..=10).map(|b| if b > 6 { Some(0.3) } else { None }).collect();
        let v = classify(&curve_from_gaps(&gaps, 3, KernelType::Triangular), &ClassifierConfig::default());
        assert_eq!(v.classification, Classification::Undetermined);
    }

    #[test]
    fn never_converging_is_non_stationary() {
        let v = classify(
            &curve_from_gaps(&vec![Some(0.4); 100], 9, KernelType::Gaussian),
            &ClassifierConfig::default(),
        );
        assert_eq!(v.classification, Classification::NonStationary);
        assert_eq!(v.b_star, None);
    }

    fn verdict(split: usize, kernel: KernelType, c: Classification) -> StationarityVerdict {
        StationarityVerdict {
            dataset: "d".into(),
            kernel,
            split_index: split,
            classification: c,
            b_star: None,
            decay_horizon: None,
            training_span_years: 1,
            max_gap: None,
            epsilon: 0.05,
            kappa: 0.01,
            reason: None,
        }
    }

    #[test]
    fn agreement_counts_splits() {
        let mut vs = Vec::new();
        for split in 1..=10 {
            for k in KernelType::NON_UNIFORM {
                let c = if split == 4 && k == KernelType::Triangular {
                    Classification::Stationary
                } else {
                    Classification::NonStationary
                };
                vs.push(verdict(split, k, c));
            }
            vs.push(verdict(split, KernelType::Uniform, Classification::Stationary));
        }
        let report = kernel_agreement(&vs);
        assert_eq!(report.kernels.len(), 3);
        assert!((report.fraction - 0.9).abs() < 1e-12);
        assert!(!report.splits[3].agree);
        assert_eq!(pairwise_agreement(&vs, KernelType::Gaussian, KernelType::Epanechnikov), 1.0);
        let dv = dataset_verdict(&vs, KernelType::Triangular).unwrap();
        assert_eq!((dv.stationary, dv.non_stationary), (1, 9));
        assert_eq!(dv.classification, Classification::NonStationary);
    }

    #[test]
    fn identical_verdicts_agree_fully() {
        let vs: Vec<_> = KernelType::NON_UNIFORM
            .iter()
            .map(|&k| verdict(1, k, Classification::Stationary))
            .collect();
        assert_eq!(kernel_agreement(&vs).fraction, 1.0);
    }

    proptest! {
        #[test]
        fn enlarging_epsilon_never_loses_stationarity(
            gaps in prop::collection::vec(prop::option::weighted(0.9, 0.0f64..1.0), 20..60),
            span in 1i32..20,
            eps in 0.0f64..0.5,
            extra in 0.0f64..0.5,
        ) {
            let c = curve_from_gaps(&gaps, span, KernelType::Gaussian);
            let tight = classify(&c, &ClassifierConfig { epsilon: eps, ..Default::default() });
            let loose = classify(&c, &ClassifierConfig { epsilon: eps + extra, ..Default::default() });
            if tight.classification == Classification::Stationary {
                prop_assert_eq!(loose.classification, Classification::Stationary);
            }
        }
    }
}
