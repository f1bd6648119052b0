use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsConfig};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::scalar::{BucketScheme, EmpiricalDistribution};

pub const DEFAULT_MCC_LAMBDA: f64 = 0.01;

/// Multinomial logistic model over the buckets of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MccProbe {
    pub scheme: BucketScheme,
    /// One row per bucket, lowest label first.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub lambda: f64,
}

impl MccProbe {
    pub fn feature_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let k = self.weights.len();
        DMatrix::from_fn(k, self.feature_dim(), |r, c| self.weights[r][c])
    }
}

/// Outcome of [`train_mcc`]: the probe and where the optimizer stopped.
#[derive(Debug, Clone)]
pub struct MccFit {
    pub probe: MccProbe,
    pub objective: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step.
    pub trace: Vec<f64>,
}

/// Objective value and gradient blocks.
#[derive(Debug, Clone)]
pub struct MccGradient {
    pub objective: f64,
    pub weights: DMatrix<f64>,
    pub intercepts: DVector<f64>,
}

/// Soft-label cross-entropy with an L2 penalty on the weights:
///
/// `J = -(1/n) sum_i sum_c Y[i,c] log softmax(W x_i + b)_c + (lambda/2) |W|_F^2`
///
/// With normalized label rows the data gradient is `(P - Y)/n` pushed through
/// the linear map.
pub fn mcc_objective(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    weights: &DMatrix<f64>,
    intercepts: &DVector<f64>,
    lambda: f64,
) -> MccGradient {
    let n = x.nrows();
    let mut logits = x * weights.transpose();
    let mut cross_entropy = 0.0;
    for (i, mut row) in logits.row_iter_mut().enumerate() {
        row += intercepts.transpose();
        let max = row.max();
        let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        for (c, z) in row.iter_mut().enumerate() {
            let log_p = *z - lse;
            cross_entropy -= y[(i, c)] * log_p;
            *z = log_p.exp();
        }
    }
    let scale = 1.0 / n as f64;
    let mut resid = logits;
    resid -= y;
    resid *= scale;

    let grad_w = resid.tr_mul(x) + weights * lambda;
    let grad_b = DVector::from_iterator(resid.ncols(), resid.column_iter().map(|c| c.sum()));
    MccGradient {
        objective: cross_entropy * scale + 0.5 * lambda * weights.norm_squared(),
        weights: grad_w,
        intercepts: grad_b,
    }
}

fn validate_labels(y: &DMatrix<f64>) -> Result<()> {
    for (i, row) in y.row_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "label row {i} has negative or non-finite entries"
            )));
        }
        let sum = row.sum();
        if (sum - 1.0).abs() > EmpiricalDistribution::SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "label row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

/// Fits the softmax probe by full-batch L-BFGS from zero weights.
pub fn train_mcc(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    scheme: &BucketScheme,
    lambda: f64,
    cfg: &TrainConfig,
) -> Result<MccFit> {
    let (n, d) = x.shape();
    let k = scheme.count;
    if n == 0 {
        return Err(Error::Empty("training rows"));
    }
    if y.shape() != (n, k) {
        return Err(Error::Dimension {
            expected: n * k,
            found: y.nrows() * y.ncols(),
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mcc features"));
    }
    validate_labels(y)?;

    let split = k * d;
    let mut diag = Vec::with_capacity(split + k);
    let col_power: Vec<f64> = x
        .column_iter()
        .map(|c| c.norm_squared() / n as f64)
        .collect();
    for _ in 0..k {
        diag.extend(
            col_power
                .iter()
                .map(|p| 1.0 / (0.25 * p + lambda).max(1e-12)),
        );
    }
    diag.extend(std::iter::repeat_n(4.0, k));

    let objective = |theta: &[f64], grad: &mut [f64]| {
        let w = DMatrix::from_row_slice(k, d, &theta[..split]);
        let b = DVector::from_column_slice(&theta[split..]);
        let g = mcc_objective(x, y, &w, &b, lambda);
        for r in 0..k {
            for c in 0..d {
                grad[r * d + c] = g.weights[(r, c)];
            }
        }
        grad[split..].copy_from_slice(g.intercepts.as_slice());
        g.objective
    };
    let lbfgs = LbfgsConfig {
        max_iters: cfg.max_iters,
        grad_tolerance: cfg.grad_tolerance,
        memory: 10,
    };
    let min = minimize(objective, vec![0.0; split + k], &diag, &lbfgs)?;

    let weights = min.x[..split]
        .chunks(d.max(1))
        .take(k)
        .map(<[f64]>::to_vec)
        .collect();
    let weights = if d == 0 { vec![Vec::new(); k] } else { weights };
    Ok(MccFit {
        probe: MccProbe {
            scheme: *scheme,
            weights,
            intercepts: min.x[split..].to_vec(),
            lambda,
        },
        objective: min.value,
        grad_inf_norm: min.grad_inf_norm,
        iterations: min.iterations,
        converged: min.converged,
        trace: min.trace,
    })
}

/// `softmax(W x + b)` as a bucket distribution.
pub fn predict_mcc(probe: &MccProbe, x: &[f64]) -> Result<EmpiricalDistribution> {
    if x.len() != probe.feature_dim() {
        return Err(Error::Dimension {
            expected: probe.feature_dim(),
            found: x.len(),
        });
    }
    let logits: Vec<f64> = probe
        .weights
        .iter()
        .zip(&probe.intercepts)
        .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect();
    EmpiricalDistribution::from_probs(probe.scheme, softmax(&logits))
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
