use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use proptest::prelude::*;

use driftscope::analysis::{analyze, prepare_splits, AnalysisConfig};
use driftscope::chronology::{make_splits, run_split, SplitOptions};
use driftscope::dataset::{Dataset, EffortUnit, ModelSpec, ProjectRecord, SizeUnit, Term};
use driftscope::ingest::{parse_generic, SchemaConfig};
use driftscope::kernel::KernelType;
use driftscope::sweep::{classify, ClassifierConfig, Classification, SweepCurve};
use driftscope::synth::{gen_drifting, gen_stationary, ProcessSpec};

fn grid(n: u32) -> Vec<f64> {
    (1..=n).map(f64::from).collect()
}

fn dataset_from_counts(counts: &[(i32, usize)]) -> Dataset {
    let mut records = Vec::new();
    for &(year, n) in counts {
        for k in 0..n {
            let i = records.len();
            records.push(ProjectRecord {
                id: format!("{year}-{k}"),
                completion_year: year,
                start_date: None,
                duration_days: None,
                effort: 100.0 + (i * 37 % 101) as f64,
                size: 10.0 + (i * 13 % 29) as f64,
                categoricals: BTreeMap::new(),
                numerics: BTreeMap::new(),
            });
        }
    }
    let spec = ModelSpec::log_effort(vec![Term::Numeric {
        name: "size".into(),
        log_transform: true,
    }]);
    Dataset::new("prop", records, spec, EffortUnit::PersonHours, SizeUnit::FunctionPoints).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_are_nested_and_chronological(
        counts in prop::collection::vec((1i32..4, 0usize..6), 2..12)
    ) {
        let mut year = 1980;
        let mut per_year = Vec::new();
        for (step, n) in counts {
            year += step;
            if n > 0 {
                per_year.push((year, n));
            }
        }
        prop_assume!(per_year.len() >= 2);
        let ds = dataset_from_counts(&per_year);
        let Ok(splits) = make_splits(&ds) else { return Ok(()); };
        for (k, s) in splits.iter().enumerate() {
            prop_assert_eq!(s.split_index, k + 1);
            prop_assert!(s.training_record_ids.len() >= ds.spec.min_training_size());
            let train: BTreeSet<&String> = s.training_record_ids.iter().collect();
            for id in &s.test_record_ids {
                prop_assert!(!train.contains(id));
                prop_assert_eq!(ds.record(id).unwrap().completion_year, s.test_year);
            }
            for id in &s.training_record_ids {
                prop_assert!(ds.record(id).unwrap().completion_year < s.test_year);
            }
            prop_assert!(s.training_span_years < s.target_year_index);
            if let Some(next) = splits.get(k + 1) {
                let mut grown: Vec<String> = s.training_record_ids.clone();
                grown.extend(s.test_record_ids.iter().cloned());
                grown.sort();
                let mut expected = next.training_record_ids.clone();
                expected.sort();
                prop_assert_eq!(grown, expected);
                prop_assert!(next.test_year > s.test_year);
            }
        }
        let last = splits.last().unwrap();
        prop_assert_eq!(last.test_year, per_year.last().unwrap().0);
    }
}

#[test]
fn uniform_kernel_gap_is_identically_zero() {
    for seed in 0..5 {
        let ds = gen_stationary(&ProcessSpec::stationary(8, 8, 1.0, 1.0, 0.4, seed))
            .unwrap()
            .dataset;
        for split in make_splits(&ds).unwrap() {
            let r = run_split(&ds, &split, KernelType::Uniform, &grid(100), &SplitOptions::default())
                .unwrap();
            let curve = SweepCurve::from_result(&ds.name, &r);
            assert!(curve.gaps(0.01).iter().all(|g| *g == Some(0.0)));
            let v = classify(&curve, &ClassifierConfig::default());
            assert_eq!(v.classification, Classification::Stationary);
            assert_eq!(v.max_gap, Some(0.0));
        }
    }
}

#[test]
fn noiseless_process_is_recovered_exactly() {
    let ds = gen_stationary(&ProcessSpec::stationary(6, 6, 0.7, 1.2, 0.0, 3))
        .unwrap()
        .dataset;
    let options = SplitOptions {
        keep_coefficients: true,
        ..SplitOptions::default()
    };
    for kernel in KernelType::ALL {
        for split in make_splits(&ds).unwrap() {
            let r = run_split(&ds, &split, kernel, &grid(20), &options).unwrap();
            for p in r.points.iter().filter(|p| p.re_train.is_some()) {
                assert!(p.re_train.unwrap().abs() < 1e-20, "{kernel} b={}", p.bandwidth);
                assert!((p.coefficients[0] - 0.7).abs() < 1e-9);
                assert!((p.coefficients[1] - 1.2).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn job_count_never_changes_results() {
    let ds = gen_drifting(&ProcessSpec::slope_ramp(10, 10, 1.0, 0.5, 1.5, 0.2, 7))
        .unwrap()
        .dataset;
    let base = AnalysisConfig::default();
    let one = analyze(&ds, &AnalysisConfig { jobs: Some(1), ..base.clone() }).unwrap();
    let many = analyze(&ds, &AnalysisConfig { jobs: Some(8), ..base }).unwrap();
    assert_eq!(one, many);
}

#[test]
fn synthetic_csv_and_schema_reload_to_the_same_dataset() {
    let synth = gen_drifting(&ProcessSpec::regime_switch(8, 7, (1.0, 0.8), (2.0, 1.1), 4, 0.3, 5))
        .unwrap();
    let schema = SchemaConfig::from_toml(&synth.schema_config().to_toml().unwrap()).unwrap();
    let loaded = parse_generic(&synth.to_csv(), Path::new("synthetic.csv"), &schema).unwrap();
    assert_eq!(loaded.dataset, synth.dataset);
    assert_eq!(synth.to_csv(), gen_drifting(&ProcessSpec::regime_switch(8, 7, (1.0, 0.8), (2.0, 1.1), 4, 0.3, 5)).unwrap().to_csv());
}

#[test]
fn weighting_helps_right_after_a_regime_switch() {
    let ds = gen_drifting(&ProcessSpec::regime_switch(10, 10, (1.0, 0.6), (3.0, 1.2), 5, 0.2, 11))
        .unwrap()
        .dataset;
    let splits = prepare_splits(&ds).unwrap();
    let post = splits.iter().find(|s| s.test_year == 2007).unwrap();
    let r = run_split(&ds, post, KernelType::Gaussian, &grid(3), &SplitOptions::default()).unwrap();
    let global = r.re_test_global.unwrap();
    for p in &r.points {
        assert!(p.re_test.unwrap() < global, "b={}: {:?} vs {global}", p.bandwidth, p.re_test);
    }
}

#[test]
fn stationary_test_errors_approach_the_baseline_at_large_bandwidths() {
    let ds = gen_stationary(&ProcessSpec::stationary(10, 10, 1.0, 1.0, 0.3, 21))
        .unwrap()
        .dataset;
    let splits = prepare_splits(&ds).unwrap();
    let last = splits.last().unwrap();
    let r = run_split(&ds, last, KernelType::Gaussian, &grid(100), &SplitOptions::default()).unwrap();
    let global = r.re_test_global.unwrap();
    for p in r.points.iter().filter(|p| p.bandwidth >= 10.0) {
        let re = p.re_test.unwrap();
        assert!((re - global).abs() <= 0.05 * global, "b={}: {re} vs {global}", p.bandwidth);
    }
}
