use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear projection onto the top principal directions of a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `dim`, by decreasing singular value.
    pub components: Vec<Vec<f64>>,
    pub k: usize,
}

impl PcaProjection {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (xi, m))| c * (xi - m))
                    .sum()
            })
            .collect())
    }

    /// Projects every row of `x`.
    pub fn apply_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let mut out = DMatrix::zeros(x.nrows(), self.k);
        let mut row = vec![0.0; self.dim()];
        for i in 0..x.nrows() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x[(i, j)];
            }
            let projected = self.apply(&row)?;
            out.row_mut(i).copy_from_slice(&projected);
        }
        Ok(out)
    }
}

/// Fits a rank-`k` PCA on the rows of `x`.
///
/// Each component is signed so that its largest-magnitude entry is positive,
/// making the result a deterministic function of `x`.
pub fn fit_pca(x: &DMatrix<f64>, k: usize) -> Result<PcaProjection> {
    let (n, dim) = x.shape();
    if n < 2 {
        return Err(Error::PcaRank {
            k,
            reason: format!("need at least 2 rows, got {n}"),
        });
    }
    if k == 0 || k > (n - 1).min(dim) {
        return Err(Error::PcaRank {
            k,
            reason: format!(
                "k must be in 1..={} for {n} rows of dimension {dim}",
                (n - 1).min(dim)
            ),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input"));
    }

    let mean: Vec<f64> = (0..dim).map(|j| x.column(j).mean()).collect();
    let mut centered = x.clone();
    for (j, m) in mean.iter().enumerate() {
        centered.column_mut(j).add_scalar_mut(-m);
    }

    let svd = SVD::new(centered, false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let largest = sv[order[0]];
    let tol = largest * f64::EPSILON * n.max(dim) as f64;
    if largest == 0.0 || sv[order[k - 1]] <= tol {
        return Err(Error::PcaRank {
            k,
            reason: "data rank is below k".into(),
        });
    }

    let components = order[..k]
        .iter()
        .map(|&r| {
            let mut row: Vec<f64> = v_t.row(r).iter().copied().collect();
            let pivot =
                row.iter().enumerate().fold(
                    0,
                    |best, (i, v)| if v.abs() > row[best].abs() { i } else { best },
                );
            if row[pivot] < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            row
        })
        .collect();

    Ok(PcaProjection {
        mean,
        components,
        k,
    })
}

/// `components * (x - mean)`.
pub fn apply_pca(proj: &PcaProjection, x: &[f64]) -> Result<Vec<f64>> {
    proj.apply(x)
}
