use driftscope::kernel::{decay_horizon, kernel_weight, scaled_time, KernelType};

fn closed_form(kernel: KernelType, t: f64) -> f64 {
    match kernel {
        KernelType::Uniform => 1.0,
        KernelType::Gaussian => (-t * t / 2.0).exp(),
        KernelType::Epanechnikov => {
            if t.abs() <= 1.0 {
                1.0 - t * t
            } else {
                0.0
            }
        }
        KernelType::Triangular => {
            if t.abs() <= 1.0 {
                1.0 - t.abs()
            } else {
                0.0
            }
        }
    }
}

#[test]
fn weights_match_closed_forms_on_a_fine_grid() {
    for kernel in KernelType::ALL {
        for i in 0..1000 {
            let t = 3.0 * f64::from(i) / 999.0;
            let got = kernel_weight(kernel, t);
            let want = closed_form(kernel, t);
            assert!((got - want).abs() < 1e-12, "{kernel} at {t}: {got} vs {want}");
            assert!((0.0..=1.0).contains(&got));
        }
    }
}

#[test]
fn gaussian_bandwidth_five_reaches_one_percent_near_year_fifteen() {
    let y = decay_horizon(KernelType::Gaussian, 5.0, 0.01).unwrap();
    assert!((y - 15.17).abs() <= 0.01, "{y}");
}

fn bisect(kernel: KernelType, b: f64, kappa: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 100.0 * b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kernel_weight(kernel, mid / b) > kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn closed_form_horizons_match_bisection() {
    for kernel in KernelType::NON_UNIFORM {
        for b in [0.5, 1.0, 3.0, 5.0, 12.5, 40.0, 100.0] {
            for kappa in [0.001, 0.01, 0.05, 0.2, 0.5, 0.9] {
                let closed = decay_horizon(kernel, b, kappa).unwrap();
                let numeric = bisect(kernel, b, kappa);
                assert!(
                    (closed - numeric).abs() <= 1e-9 * closed.max(1.0),
                    "{kernel} b={b} kappa={kappa}: {closed} vs {numeric}"
                );
            }
        }
    }
    assert!(decay_horizon(KernelType::Uniform, 5.0, 0.01).unwrap().is_infinite());
}

#[test]
fn scaled_time_counts_elapsed_years() {
    assert_eq!(scaled_time(3, 8, 5.0).unwrap(), 1.0);
    assert_eq!(scaled_time(8, 8, 2.0).unwrap(), 0.0);
    assert!(scaled_time(1, 2, 0.0).is_err());
}
