//! Variance, relative error, log transforms and the Shapiro-Wilk test.

mod shapiro_wilk;

pub use shapiro_wilk::{shapiro_wilk, Normality, NormalityResult, DEFAULT_ALPHA};

use crate::error::{Error, Result};

/// Unbiased sample variance (n - 1 denominator), computed in two passes.
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(ss / (n - 1.0))
}

/// `variance(measured - predicted) / variance(measured)`.
///
/// Both variances are mean-centred, so a constant bias in the predictions
/// does not change the result.
pub fn relative_error(predicted: &[f64], measured: &[f64]) -> Result<f64> {
    if predicted.len() != measured.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: measured.len(),
        });
    }
    let denominator = sample_variance(measured)?;
    if denominator == 0.0 {
        return Err(Error::ConstantMeasured);
    }
    let residuals: Vec<f64> = measured
        .iter()
        .zip(predicted)
        .map(|(m, p)| m - p)
        .collect();
    Ok(sample_variance(&residuals)? / denominator)
}

pub fn log_transform(xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x > 0.0 {
                Ok(x.ln())
            } else {
                Err(Error::NonPositiveValue {
                    row: i + 1,
                    column: "value".into(),
                    value: x,
                })
            }
        })
        .collect()
}

/// Plain exponentiation; no smearing correction.
pub fn back_transform(ys: &[f64]) -> Vec<f64> {
    ys.iter().map(|y| y.exp()).collect()
}
