use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::embedding::{fit_pca, PcaProjection};
use crate::error::{Error, Result};

/// Per-dimension z-scoring. Constant dimensions keep unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        Standardizer { mean, std }
    }

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
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn apply_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.iter_mut().for_each(|v| *v = (*v - m) / s);
        }
        Ok(out)
    }
}

/// Optional PCA followed by standardization, fitted on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePipeline {
    pub pca: Option<PcaProjection>,
    pub standardizer: Standardizer,
}

impl FeaturePipeline {
    /// PCA runs when the training set is smaller than `pca_threshold` rows
    /// and `pca_k` actually reduces the dimension.
    pub fn fit(x: &DMatrix<f64>, cfg: &TrainConfig) -> Result<Self> {
        let (n, dim) = x.shape();
        let pca = if n < cfg.pca_threshold && cfg.pca_k > 0 && cfg.pca_k < dim && n >= 2 {
            Some(fit_pca(x, cfg.pca_k.min(n - 1))?)
        } else {
            None
        };
        let reduced = match &pca {
            Some(p) => p.apply_rows(x)?,
            None => x.clone(),
        };
        let standardizer = if cfg.standardize {
            Standardizer::fit(&reduced)
        } else {
            Standardizer::identity(reduced.ncols())
        };
        Ok(FeaturePipeline { pca, standardizer })
    }

    pub fn input_dim(&self) -> usize {
        match &self.pca {
            Some(p) => p.dim(),
            None => self.standardizer.dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.pca {
            Some(p) => self.standardizer.apply(&p.apply(x)?),
            None => self.standardizer.apply(x),
        }
    }

    pub fn apply_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match &self.pca {
            Some(p) => self.standardizer.apply_rows(&p.apply_rows(x)?),
            None => self.standardizer.apply_rows(x),
        }
    }
}
