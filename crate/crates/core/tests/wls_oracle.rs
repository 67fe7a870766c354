mod common;

use std::collections::BTreeMap;

use rand::Rng;

use common::{assert_close, normal_equations_oracle, random_design, rng};
use driftscope::kernel::{KernelType, WeightAssignment};
use driftscope::regression::{fit_ols, fit_weighted, fit_wls};

#[test]
fn weighted_fits_match_exact_normal_equations() {
    let mut r = rng(2024);
    for case in 0..100 {
        let p = r.random_range(1..=5);
        let n = r.random_range((p + 3)..=30);
        let design = random_design(&mut r, n, p);
        let weights: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(-6.0..0.0))).collect();
        let fit = fit_weighted(&design, &weights).unwrap();
        assert!(fit.converged, "case {case}");
        let oracle = normal_equations_oracle(&design.rows, &design.response, &weights);
        for (j, (got, want)) in fit.coefficients.iter().zip(&oracle).enumerate() {
            assert_close(*got, *want, 1e-8, &format!("case {case}, coefficient {j}"));
        }
    }
}

#[test]
fn uniform_kernel_fit_equals_ols() {
    let mut r = rng(7);
    for case in 0..100 {
        let p = r.random_range(1..=5);
        let n = r.random_range((p + 3)..=30);
        let design = random_design(&mut r, n, p);
        let b: f64 = r.random_range(1.0..100.0);
        let assignment = WeightAssignment {
            target_year_index: 10,
            bandwidth: b,
            kernel: KernelType::Uniform,
            weights: design
                .row_record_ids
                .iter()
                .map(|id| (id.clone(), 1.0))
                .collect::<BTreeMap<_, _>>(),
        };
        let wls = fit_wls(&design, &assignment).unwrap();
        let ols = fit_ols(&design).unwrap();
        for (a, b) in wls.coefficients.iter().zip(&ols.coefficients) {
            assert_close(*a, *b, 1e-10, &format!("case {case}"));
        }
    }
}

#[test]
fn ols_matches_exact_normal_equations() {
    let mut r = rng(99);
    for _ in 0..50 {
        let design = random_design(&mut r, 25, 4);
        let fit = fit_ols(&design).unwrap();
        let oracle = normal_equations_oracle(&design.rows, &design.response, &vec![1.0; 25]);
        for (got, want) in fit.coefficients.iter().zip(&oracle) {
            assert_close(*got, *want, 1e-10, "ols");
        }
    }
}
