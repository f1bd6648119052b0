use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{label_for_log, BucketScheme, EmpiricalDistribution};

pub const DEFAULT_RGR_LAMBDA: f64 = 1.0;

/// Linear regressor on base-10 log-median targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgrProbe {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeOptions {
    pub lambda: f64,
    pub fit_intercept: bool,
}

impl Default for RidgeOptions {
    fn default() -> Self {
        RidgeOptions {
            lambda: DEFAULT_RGR_LAMBDA,
            fit_intercept: true,
        }
    }
}

/// Exact minimizer of `sum_i (w.x_i + b - y_i)^2 + lambda * |w|^2`, with the
/// intercept unpenalized.
///
/// Centering removes the intercept from the normal equations, leaving
/// `(Xc' Xc + lambda I) w = Xc' yc` and `b = mean(y) - mean(x).w`.
pub fn train_rgr(x: &DMatrix<f64>, y: &[f64], opts: RidgeOptions) -> Result<RgrProbe> {
    let (n, d) = x.shape();
    if n == 0 {
        return Err(Error::Empty("training rows"));
    }
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: y.len(),
        });
    }
    if !(opts.lambda.is_finite() && opts.lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {}",
            opts.lambda
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge inputs"));
    }

    let (x_mean, y_mean) = if opts.fit_intercept {
        let xm = DVector::from_iterator(d, x.column_iter().map(|c| c.mean()));
        (xm, y.iter().sum::<f64>() / n as f64)
    } else {
        (DVector::zeros(d), 0.0)
    };
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[j]);
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let mut gram = xc.tr_mul(&xc);
    for i in 0..d {
        gram[(i, i)] += opts.lambda;
    }
    let rhs = xc.tr_mul(&yc);
    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.lu().solve(&rhs).ok_or(Error::Singular)?,
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    let intercept = y_mean - x_mean.dot(&w);
    Ok(RgrProbe {
        weights: w.iter().copied().collect(),
        intercept,
        lambda: opts.lambda,
    })
}

/// `w.x + b`, in base-10 log units.
pub fn predict_rgr(probe: &RgrProbe, x: &[f64]) -> Result<f64> {
    if x.len() != probe.weights.len() {
        return Err(Error::Dimension {
            expected: probe.weights.len(),
            found: x.len(),
        });
    }
    Ok(probe.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + probe.intercept)
}

/// Point mass at the bucket containing a base-10 log estimate.
pub fn rgr_to_bucket(estimate: f64, scheme: &BucketScheme) -> EmpiricalDistribution {
    EmpiricalDistribution::point_mass(*scheme, label_for_log(scheme.from_log10(estimate), scheme))
}

/// Gradient of the ridge objective at `(w, b)`: `2 X'(Xw + b - y) + 2 lambda w`
/// followed by the intercept component.
pub fn ridge_gradient(x: &DMatrix<f64>, y: &[f64], probe: &RgrProbe) -> Vec<f64> {
    let w = DVector::from_column_slice(&probe.weights);
    let mut resid = x * &w;
    for (r, yi) in resid.iter_mut().zip(y) {
        *r += probe.intercept - yi;
    }
    let gw = x.tr_mul(&resid) * 2.0 + &w * (2.0 * probe.lambda);
    let gb = 2.0 * resid.sum();
    gw.iter().copied().chain(std::iter::once(gb)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_normal_equation() {
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let p = train_rgr(
            &x,
            &[2.0],
            RidgeOptions {
                lambda: 1.0,
                fit_intercept: false,
            },
        )
        .unwrap();
        assert!((p.weights[0] - 1.0).abs() < 1e-15);
        assert_eq!(p.intercept, 0.0);
        assert!((predict_rgr(&p, &[1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_targets_zero_weights() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 3.0, 0.0, -2.0]);
        let p = train_rgr(&x, &[2.5; 4], RidgeOptions::default()).unwrap();
        assert!(p.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((p.intercept - 2.5).abs() < 1e-12);
    }

    #[test]
    fn predict_examples() {
        let p = RgrProbe {
            weights: vec![0.0, 0.0],
            intercept: 1.5,
            lambda: 1.0,
        };
        assert_eq!(predict_rgr(&p, &[3.0, -7.0]).unwrap(), 1.5);
        assert_eq!(predict_rgr(&p, &[0.0, 0.0]).unwrap(), 1.5);
        assert!(predict_rgr(&p, &[1.0]).is_err());
    }

    #[test]
    fn bucket_mapping() {
        let s = BucketScheme::decimal();
        assert_eq!(rgr_to_bucket(2.4, &s).mode(), 2);
        assert_eq!(rgr_to_bucket(-5.0, &s).mode(), -2);
        assert_eq!(rgr_to_bucket(2.5, &s).mode(), 3);
        // log10(100) = 2 is log4(100) = 3.32, bucket 3 on the power-of-four grid.
        assert_eq!(rgr_to_bucket(2.0, &BucketScheme::power_of_four()).mode(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        let x = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(train_rgr(&x, &[1.0], RidgeOptions::default()).is_err());
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(train_rgr(&x, &[1.0, 2.0], RidgeOptions::default()).is_err());
        assert!(train_rgr(&DMatrix::zeros(0, 1), &[], RidgeOptions::default()).is_err());
    }
}
