//! Scalar attribute records and their bucketed empirical distributions.

mod bucket;
mod modality;
mod records;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bucket::{bucketize, label_for_log};
pub use modality::{detect_modality, Modality, ModalityLabel, ModalityParams};
pub use records::{
    build_distribution, build_object_distributions, filter_min_count, log_median, IngestStats,
    ObjectDistribution, ScalarDataset, ScalarRecord, DEFAULT_MIN_TOTAL,
};

/// Scalar attributes handled by the toolkit. Units are grams, meters and US dollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    #[serde(alias = "MASS")]
    Mass,
    #[serde(alias = "LENGTH")]
    Length,
    #[serde(alias = "PRICE")]
    Price,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Mass, Attribute::Length, Attribute::Price];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Mass => "mass",
            Attribute::Length => "length",
            Attribute::Price => "price",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mass" | "weight" => Ok(Attribute::Mass),
            "length" | "size" => Ok(Attribute::Length),
            "price" | "cost" => Ok(Attribute::Price),
            other => Err(Error::InvalidArgument(format!(
                "unknown attribute {other:?}"
            ))),
        }
    }
}

/// Logarithmic bucket grid: labels `min_exp ..= min_exp + count - 1`, bucket
/// `k` holding values whose base-`base` logarithm rounds to `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BucketScheme {
    pub base: u32,
    pub min_exp: i32,
    pub count: usize,
}

impl BucketScheme {
    pub const BUCKETS: usize = 12;

    pub fn new(base: u32, min_exp: i32, count: usize) -> Result<Self> {
        if base < 2 {
            return Err(Error::Scheme(format!(
                "base must be at least 2, got {base}"
            )));
        }
        if count == 0 {
            return Err(Error::Scheme("bucket count must be positive".into()));
        }
        Ok(BucketScheme {
            base,
            min_exp,
            count,
        })
    }

    /// Powers of ten from 10^-2 to 10^9.
    pub const fn decimal() -> Self {
        BucketScheme {
            base: 10,
            min_exp: -2,
            count: Self::BUCKETS,
        }
    }

    /// Powers of four from 4^-2 to 4^9, used for product prices.
    pub const fn power_of_four() -> Self {
        BucketScheme {
            base: 4,
            min_exp: -2,
            count: Self::BUCKETS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.base, self.min_exp, self.count).map(|_| ())
    }

    pub fn max_label(&self) -> i32 {
        self.min_exp + self.count as i32 - 1
    }

    pub fn labels(&self) -> impl Iterator<Item = i32> {
        self.min_exp..=self.max_label()
    }

    pub fn index_of(&self, label: i32) -> Option<usize> {
        (self.min_exp..=self.max_label())
            .contains(&label)
            .then(|| (label - self.min_exp) as usize)
    }

    pub fn label_of(&self, index: usize) -> i32 {
        self.min_exp + index as i32
    }

    pub fn clamp(&self, label: i64) -> i32 {
        label.clamp(self.min_exp as i64, self.max_label() as i64) as i32
    }

    /// Logarithm in this scheme's base.
    pub fn log(&self, value: f64) -> f64 {
        match self.base {
            10 => value.log10(),
            b if b.is_power_of_two() => value.log2() / b.trailing_zeros() as f64,
            b => value.ln() / (b as f64).ln(),
        }
    }

    /// Converts a base-10 logarithm into this scheme's units.
    pub fn from_log10(&self, log10: f64) -> f64 {
        if self.base == 10 {
            log10
        } else {
            log10 / (self.base as f64).log10()
        }
    }

    pub fn ensure_same(&self, other: &BucketScheme) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SchemeMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl Default for BucketScheme {
    fn default() -> Self {
        Self::decimal()
    }
}

impl fmt::Display for BucketScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "base {} labels {}..={}",
            self.base,
            self.min_exp,
            self.max_label()
        )
    }
}

/// Normalized histogram over the buckets of a scheme.
///
/// Model outputs use the same type with `total_count = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub scheme: BucketScheme,
    pub probs: Vec<f64>,
    pub total_count: u64,
}

impl EmpiricalDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(scheme: BucketScheme, probs: Vec<f64>, total_count: u64) -> Result<Self> {
        let dist = EmpiricalDistribution {
            scheme,
            probs,
            total_count,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// A model output or other count-free distribution.
    pub fn from_probs(scheme: BucketScheme, probs: Vec<f64>) -> Result<Self> {
        Self::new(scheme, probs, 1)
    }

    pub fn point_mass(scheme: BucketScheme, label: i32) -> Self {
        let mut probs = vec![0.0; scheme.count];
        probs[scheme
            .index_of(scheme.clamp(label as i64))
            .expect("clamped")] = 1.0;
        EmpiricalDistribution {
            scheme,
            probs,
            total_count: 1,
        }
    }

    pub fn uniform(scheme: BucketScheme) -> Self {
        EmpiricalDistribution {
            scheme,
            probs: vec![1.0 / scheme.count as f64; scheme.count],
            total_count: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.probs.len() != self.scheme.count {
            return Err(Error::Dimension {
                expected: self.scheme.count,
                found: self.probs.len(),
            });
        }
        if self.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        if self.total_count == 0 {
            return Err(Error::InvalidArgument(
                "total_count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn prob_at(&self, label: i32) -> f64 {
        self.scheme.index_of(label).map_or(0.0, |i| self.probs[i])
    }

    /// Index of the largest probability; ties go to the lower bucket.
    pub fn argmax_index(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Label of the modal bucket; ties go to the lower label.
    pub fn mode(&self) -> i32 {
        self.scheme.label_of(self.argmax_index())
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }
}
