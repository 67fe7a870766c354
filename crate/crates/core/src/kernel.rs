//! Kernel weights over elapsed project years.
//!
//! A training project completed in year index `i` receives weight
//! `K((j - i) / b)` with respect to target year index `j` and bandwidth `b`.
//! Gaussian weights have full support; Epanechnikov and Triangular weights
//! vanish once the scaled time reaches 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ProjectRecord};
use crate::error::{Error, Result};

/// Default weight threshold used to turn a bandwidth into a year horizon.
pub const DEFAULT_KAPPA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelType {
    Uniform,
    Gaussian,
    Epanechnikov,
    Triangular,
}

impl KernelType {
    pub const ALL: [KernelType; 4] = [
        KernelType::Uniform,
        KernelType::Gaussian,
        KernelType::Epanechnikov,
        KernelType::Triangular,
    ];

    pub const NON_UNIFORM: [KernelType; 3] = [
        KernelType::Gaussian,
        KernelType::Epanechnikov,
        KernelType::Triangular,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelType::Uniform => "uniform",
            KernelType::Gaussian => "gaussian",
            KernelType::Epanechnikov => "epanechnikov",
            KernelType::Triangular => "triangular",
        }
    }

    /// Weight at scaled time `t >= 0`.
    pub fn weight(self, t: f64) -> f64 {
        kernel_weight(self, t)
    }
}

impl fmt::Display for KernelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(KernelType::Uniform),
            "gaussian" => Ok(KernelType::Gaussian),
            "epanechnikov" => Ok(KernelType::Epanechnikov),
            "triangular" => Ok(KernelType::Triangular),
            other => Err(format!("unknown kernel {other:?}")),
        }
    }
}

/// Elapsed years between training index `i` and target index `j`, divided
/// by the bandwidth.
pub fn scaled_time(i_index: i32, j_index: i32, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::NonPositiveBandwidth(bandwidth));
    }
    if j_index < i_index {
        return Err(Error::TargetBeforeTraining {
            target: j_index,
            record: i_index,
        });
    }
    Ok(f64::from(j_index - i_index) / bandwidth)
}

pub fn kernel_weight(kernel: KernelType, t: f64) -> f64 {
    let t = t.abs();
    match kernel {
        KernelType::Uniform => 1.0,
        KernelType::Gaussian => (-0.5 * t * t).exp(),
        KernelType::Epanechnikov => (1.0 - t * t).max(0.0),
        KernelType::Triangular => (1.0 - t).max(0.0),
    }
}

/// Per-record weights relative to one target year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightAssignment {
    pub target_year_index: i32,
    pub bandwidth: f64,
    pub kernel: KernelType,
    pub weights: BTreeMap<String, f64>,
}

impl WeightAssignment {
    pub fn weight(&self, id: &str) -> Option<f64> {
        self.weights.get(id).copied()
    }

    /// Weights in the order of `records`; records without a weight get 0.
    pub fn aligned(&self, records: &[&ProjectRecord]) -> Vec<f64> {
        records
            .iter()
            .map(|r| self.weight(&r.id).unwrap_or(0.0))
            .collect()
    }
}

/// Weights for `training` records with respect to `target_year_index`.
pub fn weights_for_target(
    dataset: &Dataset,
    training: &[&ProjectRecord],
    kernel: KernelType,
    bandwidth: f64,
    target_year_index: i32,
) -> Result<WeightAssignment> {
    if !(bandwidth > 0.0) {
        return Err(Error::NonPositiveBandwidth(bandwidth));
    }
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut weights = BTreeMap::new();
    for record in training {
        let t = scaled_time(dataset.year_index(record), target_year_index, bandwidth)?;
        weights.insert(record.id.clone(), kernel_weight(kernel, t));
    }
    Ok(WeightAssignment {
        target_year_index,
        bandwidth,
        kernel,
        weights,
    })
}

/// Elapsed years after which the kernel weight has fallen to `kappa`.
/// The uniform kernel never decays and yields `+inf`.
pub fn decay_horizon(kernel: KernelType, bandwidth: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::BadKappa(kappa));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::NonPositiveBandwidth(bandwidth));
    }
    Ok(match kernel {
        KernelType::Uniform => f64::INFINITY,
        KernelType::Gaussian => bandwidth * (-2.0 * kappa.ln()).sqrt(),
        KernelType::Epanechnikov => bandwidth * (1.0 - kappa).sqrt(),
        KernelType::Triangular => bandwidth * (1.0 - kappa),
    })
}

/// One row of an exported weight curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCurvePoint {
    pub elapsed_years: u32,
    pub bandwidth: f64,
    pub kernel: KernelType,
    pub weight: f64,
}

/// Weights at integer elapsed years `0..=max_years` for each bandwidth.
pub fn weight_curves(
    kernel: KernelType,
    bandwidths: &[f64],
    max_years: u32,
) -> Result<Vec<WeightCurvePoint>> {
    let mut points = Vec::with_capacity(bandwidths.len() * (max_years as usize + 1));
    for &b in bandwidths {
        for y in 0..=max_years {
            let t = scaled_time(0, y as i32, b)?;
            points.push(WeightCurvePoint {
                elapsed_years: y,
                bandwidth: b,
                kernel,
                weight: kernel_weight(kernel, t),
            });
        }
    }
    Ok(points)
}

/// CSV with columns `elapsed_years,bandwidth,kernel,weight`.
pub fn weight_curves_csv(points: &[WeightCurvePoint]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for p in points {
        writer
            .serialize(p)
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn scaled_time_examples() {
        assert_eq!(scaled_time(3, 3, 7.0).unwrap(), 0.0);
        assert_eq!(scaled_time(1, 11, 5.0).unwrap(), 2.0);
        assert_abs_diff_eq!(scaled_time(2, 4, 100.0).unwrap(), 0.02, epsilon = 1e-15);
        assert!(matches!(
            scaled_time(1, 2, 0.0),
            Err(Error::NonPositiveBandwidth(_))
        ));
        assert!(matches!(
            scaled_time(4, 2, 1.0),
            Err(Error::TargetBeforeTraining { .. })
        ));
    }

    #[test]
    fn kernel_weight_examples() {
        assert_eq!(kernel_weight(KernelType::Gaussian, 0.0), 1.0);
        assert_abs_diff_eq!(kernel_weight(KernelType::Epanechnikov, 0.5), 0.75);
        assert_eq!(kernel_weight(KernelType::Triangular, 1.5), 0.0);
        assert_abs_diff_eq!(
            kernel_weight(KernelType::Gaussian, 2.0),
            0.1353352832366127,
            epsilon = 1e-15
        );
        assert_eq!(kernel_weight(KernelType::Uniform, 42.0), 1.0);
    }

    #[test]
    fn decay_horizon_examples() {
        let g5 = decay_horizon(KernelType::Gaussian, 5.0, 0.01).unwrap();
        assert!((g5 - 15.17).abs() < 0.01, "{g5}");
        let g18 = decay_horizon(KernelType::Gaussian, 18.0, 0.01).unwrap();
        assert!((g18 - 54.6).abs() < 0.05, "{g18}");
        assert_abs_diff_eq!(
            decay_horizon(KernelType::Triangular, 10.0, 0.01).unwrap(),
            9.9,
            epsilon = 1e-12
        );
        assert!(decay_horizon(KernelType::Uniform, 3.0, 0.5).unwrap().is_infinite());
        assert!(matches!(
            decay_horizon(KernelType::Gaussian, 3.0, 1.0),
            Err(Error::BadKappa(_))
        ));
    }

    #[test]
    fn compact_kernels_vanish_at_support_edge() {
        for k in [KernelType::Epanechnikov, KernelType::Triangular] {
            assert_eq!(kernel_weight(k, 1.0), 0.0);
            assert_eq!(kernel_weight(k, 3.0), 0.0);
        }
        assert!(kernel_weight(KernelType::Gaussian, 30.0) > 0.0);
    }

    #[test]
    fn csv_export_has_expected_header() {
        let pts = weight_curves(KernelType::Gaussian, &[1.0, 5.0], 3).unwrap();
        assert_eq!(pts.len(), 8);
        let csv = weight_curves_csv(&pts).unwrap();
        assert!(csv.starts_with("elapsed_years,bandwidth,kernel,weight\n0,1.0,gaussian,1.0\n"));
    }

    proptest! {
        #[test]
        fn weights_bounded_and_non_increasing(t in 0.0f64..50.0, dt in 0.0f64..5.0) {
            for k in KernelType::ALL {
                let w = kernel_weight(k, t);
                prop_assert!((0.0..=1.0).contains(&w));
                prop_assert!(kernel_weight(k, t + dt) <= w);
            }
        }

        #[test]
        fn weights_non_decreasing_in_bandwidth(y in 0.1f64..40.0, b in 0.1f64..100.0, db in 0.0f64..10.0) {
            for k in KernelType::ALL {
                prop_assert!(kernel_weight(k, y / (b + db)) >= kernel_weight(k, y / b));
            }
        }
    }
}
