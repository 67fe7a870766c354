//! Kernel-weighted regression for detecting non-stationarity in software
//! effort data.
//!
//! A dataset is split chronologically; for every split, models are fitted
//! with kernel weights that discount older projects at a range of
//! bandwidths, and the training error curve is compared with an unweighted
//! fit. Where the curves converge, and how far back the kernel still
//! reaches at that bandwidth, decides whether the process looks stationary.

pub mod analysis;
pub mod chronology;
pub mod dataset;
pub mod error;
pub mod ingest;
pub mod kernel;
pub mod regression;
pub mod report;
pub mod stats;
pub mod sweep;
pub mod synth;

pub use analysis::{analyze, AnalysisConfig, AnalysisResults, DatasetAnalysis};
pub use dataset::{Dataset, ModelSpec, ProjectRecord, Term};
pub use error::{Error, Result};
pub use kernel::KernelType;
pub use sweep::{Classification, StationarityVerdict};
