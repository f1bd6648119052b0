mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use scalar_probe::probe::{
    predict_mcc, predict_rgr, ridge_gradient, train_mcc, train_rgr, MccProbe, RidgeOptions,
    TrainConfig,
};
use scalar_probe::scalar::BucketScheme;

fn gaussian_matrix(rng: &mut impl Rng, n: usize, d: usize) -> DMatrix<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    DMatrix::from_fn(n, d, |_, _| normal.sample(rng))
}

/// Plain gradient descent on the ridge objective over `[w, b]` with step
/// `1/L`, `L` the largest eigenvalue of the Hessian.
fn ridge_by_descent(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut aug = DMatrix::from_element(n, d + 1, 1.0);
    aug.view_mut((0, 0), (n, d)).copy_from(x);
    let mut hess = aug.tr_mul(&aug) * 2.0;
    for i in 0..d {
        hess[(i, i)] += 2.0 * lambda;
    }
    let step = 1.0 / hess.symmetric_eigenvalues().max();
    let yv = DVector::from_column_slice(y);
    let mut theta = DVector::zeros(d + 1);
    for _ in 0..200_000 {
        let resid = &aug * &theta - &yv;
        let mut grad = aug.tr_mul(&resid) * 2.0;
        for i in 0..d {
            grad[i] += 2.0 * lambda * theta[i];
        }
        if grad.amax() < 1e-13 {
            break;
        }
        theta -= grad * step;
    }
    theta.iter().copied().collect()
}

#[test]
fn ridge_matches_iterative_minimizer() {
    let mut rng = common::rng(10);
    for _ in 0..5 {
        let x = gaussian_matrix(&mut rng, 20, 5);
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..9.0)).collect();
        let p = train_rgr(&x, &y, RidgeOptions::default()).unwrap();
        let oracle = ridge_by_descent(&x, &y, 1.0);
        for (a, b) in p.weights.iter().chain([&p.intercept]).zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn ridge_zeroes_gradient_on_50_by_10() {
    let mut rng = common::rng(11);
    for _ in 0..10 {
        let x = gaussian_matrix(&mut rng, 50, 10) * 4.0;
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..9.0)).collect();
        let p = train_rgr(&x, &y, RidgeOptions::default()).unwrap();
        let g = ridge_gradient(&x, &y, &p);
        assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
    }
}

#[test]
fn ridge_example_prediction() {
    let x = DMatrix::from_row_slice(1, 1, &[1.0]);
    let opts = RidgeOptions {
        lambda: 1.0,
        fit_intercept: false,
    };
    let p = train_rgr(&x, &[2.0], opts).unwrap();
    assert!((predict_rgr(&p, &[1.0]).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn objective_never_increases() {
    let mut rng = common::rng(12);
    let scheme = BucketScheme::decimal();
    for _ in 0..10 {
        let n = rng.random_range(5..40);
        let d = rng.random_range(1..10);
        let x = gaussian_matrix(&mut rng, n, d);
        let mut y = DMatrix::zeros(n, 12);
        for i in 0..n {
            let dist = common::random_distribution(&mut rng, scheme);
            y.row_mut(i).copy_from_slice(&dist.probs);
        }
        let fit = train_mcc(&x, &y, &scheme, 0.01, &TrainConfig::default()).unwrap();
        assert!(
            fit.trace.windows(2).all(|w| w[1] <= w[0]),
            "{:?}",
            fit.trace
        );
        assert!(fit.converged, "grad {}", fit.grad_inf_norm);
    }
}

#[test]
fn single_one_hot_example_is_learned() {
    // With free intercepts the optimum pushes the hot class toward 1; at a
    // stationary point the hot intercept's gradient is p_hot - 1.
    let scheme = BucketScheme::decimal();
    let x = DMatrix::from_row_slice(1, 1, &[1.0]);
    let mut y = DMatrix::zeros(1, 12);
    y[(0, 4)] = 1.0;
    let cfg = TrainConfig::default();
    let fit = train_mcc(&x, &y, &scheme, 0.01, &cfg).unwrap();
    let p = predict_mcc(&fit.probe, &[1.0]).unwrap();
    assert!(p.probs[4] > 0.9);
    assert!(
        p.probs[4] > 1.0 - 2.0 * cfg.grad_tolerance,
        "{}",
        p.probs[4]
    );
}

#[test]
fn large_lambda_matches_mean_label() {
    let mut rng = common::rng(13);
    let scheme = BucketScheme::decimal();
    let x = gaussian_matrix(&mut rng, 30, 4) * 10.0;
    let mut y = DMatrix::zeros(30, 12);
    for i in 0..30 {
        y.row_mut(i)
            .copy_from_slice(&common::random_distribution(&mut rng, scheme).probs);
    }
    let fit = train_mcc(&x, &y, &scheme, 1e6, &TrainConfig::default()).unwrap();
    let mean: Vec<f64> = y.column_iter().map(|c| c.mean()).collect();
    for i in 0..30 {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let p = predict_mcc(&fit.probe, &row).unwrap();
        let tv: f64 = 0.5
            * p.probs
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        assert!(tv < 1e-3, "{tv}");
    }
}

fn probe_strategy() -> impl Strategy<Value = (MccProbe, Vec<f64>, f64)> {
    (1usize..6).prop_flat_map(|d| {
        (
            prop::collection::vec(prop::collection::vec(-20.0..20.0f64, d), 12),
            prop::collection::vec(-20.0..20.0f64, 12),
            prop::collection::vec(-5.0..5.0f64, d),
            -50.0..50.0f64,
        )
            .prop_map(|(weights, intercepts, x, shift)| {
                let probe = MccProbe {
                    scheme: BucketScheme::decimal(),
                    weights,
                    intercepts,
                    lambda: 0.01,
                };
                (probe, x, shift)
            })
    })
}

proptest! {
    #[test]
    fn softmax_outputs_are_distributions((probe, x, _) in probe_strategy()) {
        let p = predict_mcc(&probe, &x).unwrap();
        prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.probs.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn intercept_shift_invariance((probe, x, shift) in probe_strategy()) {
        let mut shifted = probe.clone();
        shifted.intercepts.iter_mut().for_each(|b| *b += shift);
        let a = predict_mcc(&probe, &x).unwrap();
        let b = predict_mcc(&shifted, &x).unwrap();
        for (u, v) in a.probs.iter().zip(&b.probs) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }
}
