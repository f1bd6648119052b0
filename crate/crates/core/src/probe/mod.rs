//! Linear probes over frozen embeddings.
//!
//! Two probes are provided: `rgr`, a ridge regressor predicting the base-10
//! log of an object's median value, and `mcc`, a softmax classifier trained
//! against the full bucket distribution as soft labels. Both see features
//! that went through an optional PCA and per-dimension standardization fitted
//! on the training objects only.

mod features;
pub(crate) mod lbfgs;
mod ridge;
mod softmax;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::PcaProjection;
use crate::error::{Error, Result};
use crate::scalar::{Attribute, BucketScheme, EmpiricalDistribution};

pub use features::{FeaturePipeline, Standardizer};
pub use ridge::{
    predict_rgr, rgr_to_bucket, ridge_gradient, train_rgr, RgrProbe, RidgeOptions,
    DEFAULT_RGR_LAMBDA,
};
pub use softmax::{
    mcc_objective, predict_mcc, train_mcc, MccFit, MccGradient, MccProbe, DEFAULT_MCC_LAMBDA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Rgr,
    Mcc,
}

impl ProbeKind {
    pub fn default_lambda(self) -> f64 {
        match self {
            ProbeKind::Rgr => DEFAULT_RGR_LAMBDA,
            ProbeKind::Mcc => DEFAULT_MCC_LAMBDA,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Rgr => "rgr",
            ProbeKind::Mcc => "mcc",
        }
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgr" => Ok(ProbeKind::Rgr),
            "mcc" => Ok(ProbeKind::Mcc),
            other => Err(Error::InvalidArgument(format!("unknown probe {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub grad_tolerance: f64,
    pub pca_k: usize,
    /// PCA is only fitted on training sets with fewer rows than this.
    pub pca_threshold: usize,
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 1000,
            grad_tolerance: 1e-6,
            pca_k: 150,
            pca_threshold: 2000,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0
            || !(self.grad_tolerance.is_finite() && self.grad_tolerance > 0.0)
            || self.pca_threshold == 0
        {
            return Err(Error::InvalidArgument(
                "training limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fitted regression or classification weights.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeModel {
    Rgr(RgrProbe),
    Mcc(MccProbe),
}

impl ProbeModel {
    pub fn kind(&self) -> ProbeKind {
        match self {
            ProbeModel::Rgr(_) => ProbeKind::Rgr,
            ProbeModel::Mcc(_) => ProbeKind::Mcc,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            ProbeModel::Rgr(p) => p.lambda,
            ProbeModel::Mcc(p) => p.lambda,
        }
    }
}

/// Training target for one object.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub distribution: &'a EmpiricalDistribution,
    pub log_median: f64,
}

/// What a probe says about one object.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    /// Base-10 log estimate from `rgr`.
    Point(f64),
    Distribution(EmpiricalDistribution),
}

/// A probe together with the feature transform it was trained behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProbeFile", try_from = "ProbeFile")]
pub struct TrainedProbe {
    pub model: ProbeModel,
    pub scheme: BucketScheme,
    pub features: FeaturePipeline,
    pub attribute: Option<Attribute>,
    pub encoder: Option<String>,
}

impl TrainedProbe {
    /// Fits the feature pipeline and probe on raw embedding rows `x`.
    pub fn fit(
        kind: ProbeKind,
        x: &DMatrix<f64>,
        targets: &[Target<'_>],
        scheme: &BucketScheme,
        lambda: f64,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if targets.len() != x.nrows() {
            return Err(Error::Dimension {
                expected: x.nrows(),
                found: targets.len(),
            });
        }
        let features = FeaturePipeline::fit(x, cfg)?;
        let z = features.apply_rows(x)?;
        let model = match kind {
            ProbeKind::Rgr => {
                let y: Vec<f64> = targets.iter().map(|t| t.log_median).collect();
                ProbeModel::Rgr(train_rgr(
                    &z,
                    &y,
                    RidgeOptions {
                        lambda,
                        fit_intercept: true,
                    },
                )?)
            }
            ProbeKind::Mcc => {
                let mut y = DMatrix::zeros(targets.len(), scheme.count);
                for (i, t) in targets.iter().enumerate() {
                    scheme.ensure_same(&t.distribution.scheme)?;
                    y.row_mut(i).copy_from_slice(&t.distribution.probs);
                }
                ProbeModel::Mcc(train_mcc(&z, &y, scheme, lambda, cfg)?.probe)
            }
        };
        Ok(TrainedProbe {
            model,
            scheme: *scheme,
            features,
            attribute: None,
            encoder: None,
        })
    }

    pub fn kind(&self) -> ProbeKind {
        self.model.kind()
    }

    pub fn predict(&self, embedding: &[f64]) -> Result<Prediction> {
        let z = self.features.apply(embedding)?;
        Ok(match &self.model {
            ProbeModel::Rgr(p) => Prediction::Point(predict_rgr(p, &z)?),
            ProbeModel::Mcc(p) => Prediction::Distribution(predict_mcc(p, &z)?),
        })
    }

    /// Predicted bucket distribution; `rgr` estimates become point masses.
    pub fn predict_distribution(&self, embedding: &[f64]) -> Result<EmpiricalDistribution> {
        Ok(match self.predict(embedding)? {
            Prediction::Point(v) => rgr_to_bucket(v, &self.scheme),
            Prediction::Distribution(d) => d,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightsRepr {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

/// On-disk probe layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProbeFile {
    kind: ProbeKind,
    lambda: f64,
    scheme: BucketScheme,
    standardizer: Standardizer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pca: Option<PcaProjection>,
    weights: WeightsRepr,
    intercepts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attribute: Option<Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoder: Option<String>,
}

impl From<TrainedProbe> for ProbeFile {
    fn from(p: TrainedProbe) -> Self {
        let lambda = p.model.lambda();
        let kind = p.model.kind();
        let (weights, intercepts) = match p.model {
            ProbeModel::Rgr(r) => (WeightsRepr::Vector(r.weights), vec![r.intercept]),
            ProbeModel::Mcc(m) => (WeightsRepr::Matrix(m.weights), m.intercepts),
        };
        ProbeFile {
            kind,
            lambda,
            scheme: p.scheme,
            standardizer: p.features.standardizer,
            pca: p.features.pca,
            weights,
            intercepts,
            attribute: p.attribute,
            encoder: p.encoder,
        }
    }
}

impl TryFrom<ProbeFile> for TrainedProbe {
    type Error = Error;

    fn try_from(f: ProbeFile) -> Result<Self> {
        f.scheme.validate()?;
        let dim = f.standardizer.dim();
        if f.standardizer.std.len() != dim {
            return Err(Error::InvalidArgument(
                "standardizer mean/std lengths differ".into(),
            ));
        }
        if let Some(p) = &f.pca {
            if p.components.len() != p.k
                || p.k != dim
                || p.components.iter().any(|r| r.len() != p.mean.len())
            {
                return Err(Error::InvalidArgument("inconsistent PCA shape".into()));
            }
        }
        let params_finite = f.lambda.is_finite()
            && f.intercepts.iter().all(|v| v.is_finite())
            && f.standardizer
                .mean
                .iter()
                .chain(&f.standardizer.std)
                .all(|v| v.is_finite());
        if !params_finite {
            return Err(Error::NonFinite("probe parameters"));
        }
        let model = match (f.kind, f.weights) {
            (ProbeKind::Rgr, WeightsRepr::Vector(weights)) => {
                if weights.len() != dim || f.intercepts.len() != 1 {
                    return Err(Error::InvalidArgument("rgr weight shape mismatch".into()));
                }
                ProbeModel::Rgr(RgrProbe {
                    weights,
                    intercept: f.intercepts[0],
                    lambda: f.lambda,
                })
            }
            (ProbeKind::Mcc, WeightsRepr::Matrix(weights)) => {
                if weights.len() != f.scheme.count
                    || f.intercepts.len() != f.scheme.count
                    || weights.iter().any(|r| r.len() != dim)
                {
                    return Err(Error::InvalidArgument("mcc weight shape mismatch".into()));
                }
                ProbeModel::Mcc(MccProbe {
                    scheme: f.scheme,
                    weights,
                    intercepts: f.intercepts,
                    lambda: f.lambda,
                })
            }
            // An empty matrix deserializes as a vector.
            (ProbeKind::Mcc, WeightsRepr::Vector(v)) if v.is_empty() => {
                return Err(Error::InvalidArgument("mcc probe has no weights".into()))
            }
            (kind, _) => {
                return Err(Error::InvalidArgument(format!(
                    "weights layout does not match probe kind {kind}"
                )))
            }
        };
        Ok(TrainedProbe {
            model,
            scheme: f.scheme,
            features: FeaturePipeline {
                pca: f.pca,
                standardizer: f.standardizer,
            },
            attribute: f.attribute,
            encoder: f.encoder,
        })
    }
}
