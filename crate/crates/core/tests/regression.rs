mod common;

use common::normal_equations_fit;
use msavg::regression::{averaged_fit, fit_nested_models, Dataset, NestedModelSpec};
use msavg::Error;
use ndarray::{array, s, Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

#[test]
fn univariate_ols_closed_form() {
    let x = array![[1.0], [2.0], [3.0], [4.0]];
    let y = array![1.0, 3.0, 2.0, 5.0];
    let fits = fit_nested_models(&Dataset::new(y.clone(), x).unwrap(), &NestedModelSpec::new(vec![1]).unwrap()).unwrap();
    // theta = sum x y / sum x^2 = 33 / 30
    let theta = (1.0 * 1.0 + 2.0 * 3.0 + 3.0 * 2.0 + 4.0 * 5.0) / (1.0 + 4.0 + 9.0 + 16.0);
    assert_eq!(theta, 33.0 / 30.0);
    for i in 0..4 {
        let f = theta * (i + 1) as f64;
        assert!((fits.fitted()[[i, 0]] - f).abs() < 1e-13);
        assert!((fits.residuals()[[i, 0]] - (y[i] - f)).abs() < 1e-13);
    }
    let rss: f64 = (0..4).map(|i| (y[i] - theta * (i + 1) as f64).powi(2)).sum();
    assert!((fits.sigma2_hat() - rss / 3.0).abs() < 1e-13);
}

#[test]
fn exact_proportionality() {
    let fits = fit_nested_models(
        &Dataset::new(array![2.0, 4.0, 6.0], array![[1.0], [2.0], [3.0]]).unwrap(),
        &NestedModelSpec::new(vec![1]).unwrap(),
    )
    .unwrap();
    for i in 0..3 {
        assert!((fits.fitted()[[i, 0]] - 2.0 * (i + 1) as f64).abs() < 1e-14);
        assert!(fits.residuals()[[i, 0]].abs() < 1e-14);
    }
}

#[test]
fn noiseless_saturated_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = gaussian(&mut rng, 30, 5);
    let y = x.dot(&array![1.0, -2.0, 0.5, 3.0, 0.25]);
    let fits = fit_nested_models(&Dataset::new(y, x).unwrap(), &NestedModelSpec::consecutive(5).unwrap()).unwrap();
    assert!(fits.residuals().column(4).iter().all(|v| v.abs() < 1e-12));
    assert!(fits.sigma2_hat() < 1e-24);
}

#[test]
fn incremental_matches_independent_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(20..120);
        let p = rng.random_range(1..12);
        let x = gaussian(&mut rng, n, p);
        let y: Array1<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0 + 1.0).collect();
        let mut k: Vec<usize> = (1..=p).filter(|_| rng.random_bool(0.6)).collect();
        if k.is_empty() {
            k.push(p);
        }
        let fits = fit_nested_models(&Dataset::new(y.clone(), x.clone()).unwrap(), &NestedModelSpec::new(k.clone()).unwrap())
            .unwrap();
        for (m, &km) in k.iter().enumerate() {
            let oracle = normal_equations_fit(&x.slice(s![.., ..km]).to_owned(), &y);
            let got = fits.fitted().column(m).to_owned();
            let rel = (&got - &oracle).mapv(f64::abs).sum() / oracle.mapv(f64::abs).sum();
            assert!(rel < 1e-8, "model {m}: relative error {rel}");
        }
    }
}

#[test]
fn two_model_average_is_columnwise_mean() {
    let x = array![[1.0, 0.3], [2.0, -1.0], [0.5, 0.7], [1.5, 2.0], [-1.0, 0.4]];
    let y = array![3.0, 2.5, 1.0, 4.0, 0.2];
    let fits = fit_nested_models(&Dataset::new(y, x).unwrap(), &NestedModelSpec::new(vec![1, 2]).unwrap()).unwrap();
    let avg = averaged_fit(&fits, &[0.5, 0.5], 0.0).unwrap();
    for i in 0..5 {
        let direct = (fits.fitted()[[i, 0]] + fits.fitted()[[i, 1]]) / 2.0;
        assert!((avg[i] - direct).abs() < 1e-15);
    }
    let unit = averaged_fit(&fits, &[0.0, 1.0], 0.0).unwrap();
    assert_eq!(unit, fits.fitted().column(1).to_owned());
    let shifted = averaged_fit(&fits, &[0.2, 0.8], 5.0).unwrap();
    let base = averaged_fit(&fits, &[0.2, 0.8], 0.0).unwrap();
    assert!((&shifted - &base).iter().all(|d| (d - 5.0).abs() < 1e-14));
}

#[test]
fn averaged_fit_rejects_off_simplex() {
    let x = array![[1.0, 0.3], [2.0, -1.0], [0.5, 0.7], [1.5, 2.0]];
    let fits = fit_nested_models(&Dataset::new(array![1.0, 2.0, 3.0, 4.0], x).unwrap(), &NestedModelSpec::consecutive(2).unwrap())
        .unwrap();
    assert!(matches!(averaged_fit(&fits, &[0.6, 0.6], 0.0), Err(Error::SimplexViolation(_))));
    assert!(matches!(averaged_fit(&fits, &[1.2, -0.2], 0.0), Err(Error::SimplexViolation(_))));
    assert!(averaged_fit(&fits, &[0.5 + 5e-10, 0.5], 0.0).is_ok());
}

#[test]
fn constant_duplicate_column_is_rank_deficient() {
    let x = array![[1.0, 1.0, 0.2], [1.0, 1.0, -0.5], [1.0, 1.0, 0.9], [1.0, 1.0, 1.3], [1.0, 1.0, -2.0]];
    let err = fit_nested_models(&Dataset::new(array![1.0, 2.0, 3.0, 4.0, 5.0], x).unwrap(), &NestedModelSpec::consecutive(3).unwrap())
        .unwrap_err();
    assert!(matches!(err, Error::RankDeficient { column: 2 }), "{err:?}");
}

#[test]
fn ladder_beyond_design_is_a_dimension_error() {
    let x = array![[1.0], [2.0], [3.0]];
    let err = fit_nested_models(&Dataset::new(array![1.0, 2.0, 3.0], x).unwrap(), &NestedModelSpec::new(vec![1, 2]).unwrap())
        .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)));
}

#[test]
fn duplicate_trailing_observation_keeps_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, p) = (25, 4);
    let x = gaussian(&mut rng, n, p);
    let y: Array1<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut x2 = Array2::zeros((n + 1, p));
    x2.slice_mut(s![..n, ..]).assign(&x);
    x2.row_mut(n).assign(&x.row(n - 1));
    let mut y2 = Array1::zeros(n + 1);
    y2.slice_mut(s![..n]).assign(&y);
    y2[n] = y[n - 1];
    let fits = fit_nested_models(&Dataset::new(y2.clone(), x2).unwrap(), &NestedModelSpec::consecutive(p).unwrap()).unwrap();
    check_invariants(&fits.fitted().to_owned(), &fits.residuals().to_owned(), &y2);
}

fn check_invariants(f: &Array2<f64>, e: &Array2<f64>, y: &Array1<f64>) {
    let ynorm2 = y.dot(y);
    let mut prev = f64::INFINITY;
    for m in 0..f.ncols() {
        for i in 0..y.len() {
            assert!((f[[i, m]] + e[[i, m]] - y[i]).abs() <= 1e-10 * ynorm2.sqrt());
        }
        assert!(e.column(m).dot(&f.column(m)).abs() <= 1e-8 * ynorm2);
        for l in 0..=m {
            let d = &f.column(l) - &f.column(m);
            assert!(e.column(m).dot(&d).abs() <= 1e-8 * ynorm2);
        }
        let rss = e.column(m).dot(&e.column(m));
        assert!(rss <= prev * (1.0 + 1e-12));
        prev = rss;
    }
}

#[test]
fn fitting_is_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = gaussian(&mut rng, 60, 8);
    let y: Array1<f64> = (0..60).map(|_| rng.sample(StandardNormal)).collect();
    let data = Dataset::new(y, x).unwrap();
    let spec = NestedModelSpec::new(vec![2, 5, 8]).unwrap();
    let a = fit_nested_models(&data, &spec).unwrap();
    let b = fit_nested_models(&data, &spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.sigma2_hat().to_bits(), b.sigma2_hat().to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_invariants_hold(seed in any::<u64>(), n in 8usize..80, p in 1usize..7) {
        prop_assume!(p < n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian(&mut rng, n, p);
        let y: Array1<f64> = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal) + 0.5).collect();
        let fits = fit_nested_models(&Dataset::new(y.clone(), x).unwrap(), &NestedModelSpec::consecutive(p).unwrap()).unwrap();
        check_invariants(&fits.fitted().to_owned(), &fits.residuals().to_owned(), &y);
        prop_assert!(fits.sigma2_hat() >= 0.0);
    }
}
