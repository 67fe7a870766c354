#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use driftscope::regression::DesignMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn exact(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Solves `(X'WX) beta = X'Wy` in exact rational arithmetic.
pub fn normal_equations_oracle(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let xr: Vec<Vec<BigRational>> = x.iter().map(|r| r.iter().map(|v| exact(*v)).collect()).collect();
    let yr: Vec<BigRational> = y.iter().map(|v| exact(*v)).collect();
    let wr: Vec<BigRational> = w.iter().map(|v| exact(*v)).collect();

    let mut a = vec![vec![BigRational::zero(); p + 1]; p];
    for i in 0..xr.len() {
        for j in 0..p {
            let wx = &wr[i] * &xr[i][j];
            for k in 0..p {
                a[j][k] += &wx * &xr[i][k];
            }
            a[j][p] += &wx * &yr[i];
        }
    }
    for col in 0..p {
        let pivot = (col..p).find(|&r| !a[r][col].is_zero()).expect("non-singular");
        a.swap(col, pivot);
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let factor = &a[r][col] / &a[col][col];
                for c in col..=p {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    (0..p).map(|j| to_f64(&(&a[j][p] / &a[j][j]))).collect()
}

/// Exact `var(pred - meas) / var(meas)`.
pub fn relative_error_oracle(predicted: &[f64], measured: &[f64]) -> f64 {
    let n = BigRational::from_integer(BigInt::from(measured.len()));
    let var = |xs: &[BigRational]| {
        let mean = xs.iter().fold(BigRational::zero(), |acc, x| acc + x) / &n;
        xs.iter().fold(BigRational::zero(), |acc, x| {
            let d = x - &mean;
            acc + &d * &d
        })
    };
    let m: Vec<BigRational> = measured.iter().map(|v| exact(*v)).collect();
    let r: Vec<BigRational> = measured
        .iter()
        .zip(predicted)
        .map(|(a, b)| exact(*a) - exact(*b))
        .collect();
    to_f64(&(var(&r) / var(&m)))
}

/// Random design with an intercept column and `p - 1` regressors in [-2, 2].
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DesignMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            std::iter::once(1.0)
                .chain((1..p).map(|_| rng.random_range(-2.0..2.0)))
                .collect()
        })
        .collect();
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
    let response = rows
        .iter()
        .map(|r| r.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>() + rng.random_range(-0.5..0.5))
        .collect();
    DesignMatrix {
        column_names: (0..p)
            .map(|j| if j == 0 { "intercept".to_string() } else { format!("x{j}") })
            .collect(),
        rows,
        response,
        row_record_ids: (0..n).map(|i| format!("r{i}")).collect(),
    }
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    let scale = 1.0f64.max(b.abs());
    assert!((a - b).abs() <= tol * scale, "{what}: {a} vs {b}");
}
