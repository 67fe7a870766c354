mod common;

use rand::Rng;

use common::{relative_error_oracle, rng};
use driftscope::stats::{relative_error, sample_variance};
use driftscope::Error;

#[test]
fn constant_predictor_has_unit_error() {
    let mut r = rng(1);
    for _ in 0..50 {
        let n = r.random_range(2..60);
        let measured: Vec<f64> = (0..n).map(|_| r.random_range(1.0..5000.0)).collect();
        let c = r.random_range(-100.0..100.0);
        let re = relative_error(&vec![c; n], &measured).unwrap();
        assert!((re - 1.0).abs() < 1e-12, "{re}");
    }
}

#[test]
fn perfect_predictions_have_zero_error() {
    let measured = [12.0, 480.5, 33.25, 7.0, 1500.0];
    assert_eq!(relative_error(&measured, &measured).unwrap(), 0.0);
}

#[test]
fn matches_exact_rational_brute_force() {
    let mut r = rng(31);
    for case in 0..50 {
        let n = r.random_range(2..80);
        let measured: Vec<f64> = (0..n).map(|_| r.random_range(0.5..10000.0)).collect();
        let predicted: Vec<f64> = measured
            .iter()
            .map(|m| m * r.random_range(0.3..2.5))
            .collect();
        let got = relative_error(&predicted, &measured).unwrap();
        let want = relative_error_oracle(&predicted, &measured);
        assert!(
            (got - want).abs() <= 1e-12 * want.max(1.0),
            "case {case}: {got} vs {want}"
        );
    }
}

#[test]
fn degenerate_inputs() {
    assert_eq!(
        relative_error(&[1.0, 2.0], &[3.0, 3.0]),
        Err(Error::ConstantMeasured)
    );
    assert!(matches!(
        relative_error(&[1.0], &[1.0, 2.0]),
        Err(Error::LengthMismatch { .. })
    ));
    assert!(sample_variance(&[4.0]).is_err());
}
