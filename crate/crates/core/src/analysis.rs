//! End-to-end pipeline: splits, sweeps, verdicts and agreement for one dataset.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chronology::{
    has_project_dates, kitchenham_test_filter, make_splits, run_split, ChronoSplit, NormalityMode,
    SplitOptions, SplitResult,
};
use crate::error::{Error, Result};
use crate::dataset::Dataset;
use crate::kernel::{KernelType, DEFAULT_KAPPA};
use crate::stats::DEFAULT_ALPHA;
use crate::sweep::{
    classify, dataset_verdict, default_grid, kernel_agreement, AgreementReport, ClassifierConfig,
    DatasetVerdict, StationarityVerdict, SweepCurve, DEFAULT_EPSILON, DEFAULT_GAP_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub kernels: Vec<KernelType>,
    pub bandwidths: Vec<f64>,
    pub epsilon: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub mode: NormalityMode,
    pub gap_floor: f64,
    #[serde(default)]
    pub keep_coefficients: bool,
    /// Worker threads; `None` uses the available parallelism. Results do not
    /// depend on it, so it is left out of serialized results.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            kernels: KernelType::ALL.to_vec(),
            bandwidths: default_grid(),
            epsilon: DEFAULT_EPSILON,
            kappa: DEFAULT_KAPPA,
            alpha: DEFAULT_ALPHA,
            mode: NormalityMode::default(),
            gap_floor: DEFAULT_GAP_FLOOR,
            keep_coefficients: false,
            jobs: None,
        }
    }
}

impl AnalysisConfig {
    pub fn classifier(&self) -> ClassifierConfig {
        ClassifierConfig {
            epsilon: self.epsilon,
            kappa: self.kappa,
            gap_floor: self.gap_floor,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::InvalidSpec("no kernels selected".into()));
        }
        if self.bandwidths.is_empty() {
            return Err(Error::InvalidSpec("empty bandwidth grid".into()));
        }
        if let Some(b) = self.bandwidths.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(Error::NonPositiveBandwidth(*b));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::BadKappa(self.kappa));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidSpec(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidSpec("jobs must be at least 1".into()));
        }
        Ok(())
    }

    fn split_options(&self) -> SplitOptions {
        SplitOptions {
            mode: self.mode,
            alpha: self.alpha,
            keep_coefficients: self.keep_coefficients,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAnalysis {
    pub dataset: String,
    pub n_records: usize,
    pub origin_year: i32,
    pub splits: Vec<ChronoSplit>,
    /// Kernel-major: every split for the first kernel, then the next kernel.
    pub results: Vec<SplitResult>,
    pub curves: Vec<SweepCurve>,
    pub verdicts: Vec<StationarityVerdict>,
    pub summary: Vec<DatasetVerdict>,
    pub agreement: AgreementReport,
}

impl DatasetAnalysis {
    pub fn verdicts_for(&self, kernel: KernelType) -> impl Iterator<Item = &StationarityVerdict> {
        self.verdicts.iter().filter(move |v| v.kernel == kernel)
    }

    pub fn results_for(&self, kernel: KernelType) -> impl Iterator<Item = &SplitResult> {
        self.results.iter().filter(move |r| r.kernel == kernel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResults {
    pub config: AnalysisConfig,
    pub analyses: Vec<DatasetAnalysis>,
}

impl AnalysisResults {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn verdicts(&self) -> Vec<StationarityVerdict> {
        self.analyses
            .iter()
            .flat_map(|a| a.verdicts.iter().cloned())
            .collect()
    }
}

/// Splits the dataset chronologically, applying the start-date test filter
/// when every record carries a start date and duration.
pub fn prepare_splits(dataset: &Dataset) -> Result<Vec<ChronoSplit>> {
    let splits = make_splits(dataset)?;
    if has_project_dates(dataset) {
        splits
            .iter()
            .map(|s| kitchenham_test_filter(s, dataset))
            .collect()
    } else {
        Ok(splits)
    }
}

pub fn analyze(dataset: &Dataset, config: &AnalysisConfig) -> Result<DatasetAnalysis> {
    config.check()?;
    let splits = prepare_splits(dataset)?;
    let work: Vec<(KernelType, &ChronoSplit)> = config
        .kernels
        .iter()
        .flat_map(|&k| splits.iter().map(move |s| (k, s)))
        .collect();
    let options = config.split_options();
    let run = || -> Result<Vec<SplitResult>> {
        work.par_iter()
            .map(|(k, s)| run_split(dataset, s, *k, &config.bandwidths, &options))
            .collect()
    };
    let results = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidSpec(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let classifier = config.classifier();
    let curves: Vec<SweepCurve> = results
        .iter()
        .map(|r| SweepCurve::from_result(&dataset.name, r))
        .collect();
    let verdicts: Vec<StationarityVerdict> =
        curves.iter().map(|c| classify(c, &classifier)).collect();
    let summary = config
        .kernels
        .iter()
        .filter_map(|&k| dataset_verdict(&verdicts, k))
        .collect();
    let agreement = kernel_agreement(&verdicts);
    Ok(DatasetAnalysis {
        dataset: dataset.name.clone(),
        n_records: dataset.records.len(),
        origin_year: dataset.origin_year,
        splits,
        results,
        curves,
        verdicts,
        summary,
        agreement,
    })
}
