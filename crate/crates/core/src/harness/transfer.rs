//! Zero-shot transfer: relative size comparisons and product price
//! distributions, both scored with probes trained elsewhere.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::metrics::{MetricTriple, MseVariant};
use crate::probe::{Prediction, TrainedProbe};
use crate::scalar::{
    build_distribution, Attribute, BucketScheme, EmpiricalDistribution, ScalarRecord,
};

/// Log10 gap below which two `rgr` estimates count as similar.
pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelativeLabel {
    Bigger,
    Smaller,
    Similar,
}

impl FromStr for RelativeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bigger" => Ok(RelativeLabel::Bigger),
            "smaller" => Ok(RelativeLabel::Smaller),
            "similar" => Ok(RelativeLabel::Similar),
            other => Err(Error::InvalidArgument(format!(
                "unknown comparison label {other:?}"
            ))),
        }
    }
}

impl fmt::Display for RelativeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelativeLabel::Bigger => "bigger",
            RelativeLabel::Smaller => "smaller",
            RelativeLabel::Similar => "similar",
        })
    }
}

/// "`object_a` is `label` than `object_b` in `attribute`".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelativePair {
    pub object_a: String,
    pub object_b: String,
    pub attribute: Attribute,
    pub label: RelativeLabel,
}

/// Reads `object_a<TAB>object_b<TAB>attribute<TAB>label` rows. Blank lines
/// and lines starting with `#` are ignored.
pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<RelativePair>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim_end_matches('\r');
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let parse = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let (a, b) = (fields[0].trim(), fields[1].trim());
        if a.is_empty() || b.is_empty() {
            return Err(parse("empty object name".into()));
        }
        if a == b {
            return Err(parse(format!("object {a:?} compared with itself")));
        }
        let attribute = fields[2].parse().map_err(|e: Error| parse(e.to_string()))?;
        let label = fields[3].parse().map_err(|e: Error| parse(e.to_string()))?;
        pairs.push(RelativePair {
            object_a: a.to_string(),
            object_b: b.to_string(),
            attribute,
            label,
        });
    }
    Ok(pairs)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<RelativePair>> {
    read_pairs(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeOptions {
    pub tau: f64,
    /// Bucket labels at most this far apart count as similar for `mcc`.
    pub bucket_window: u32,
}

impl Default for RelativeOptions {
    fn default() -> Self {
        RelativeOptions {
            tau: DEFAULT_TAU,
            bucket_window: 0,
        }
    }
}

pub fn compare_points(a: f64, b: f64, tau: f64) -> RelativeLabel {
    let diff = a - b;
    if diff.abs() < tau {
        RelativeLabel::Similar
    } else if diff > 0.0 {
        RelativeLabel::Bigger
    } else {
        RelativeLabel::Smaller
    }
}

pub fn compare_buckets(a: i32, b: i32, window: u32) -> RelativeLabel {
    if a.abs_diff(b) <= window {
        RelativeLabel::Similar
    } else if a > b {
        RelativeLabel::Bigger
    } else {
        RelativeLabel::Smaller
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelativeResult {
    /// `None` when no pair could be scored.
    pub accuracy: Option<f64>,
    pub correct: usize,
    pub scored: usize,
    pub missing_embedding: usize,
    /// Pairs about an attribute the probe was not trained on.
    pub other_attribute: usize,
}

/// Scores comparisons with a probe: `rgr` compares point estimates with a
/// `tau` dead zone, `mcc` compares argmax buckets.
pub fn eval_relative(
    probe: &TrainedProbe,
    table: &EmbeddingTable,
    pairs: &[RelativePair],
    opts: &RelativeOptions,
) -> Result<RelativeResult> {
    let mut res = RelativeResult::default();
    for pair in pairs {
        if probe.attribute.is_some_and(|a| a != pair.attribute) {
            res.other_attribute += 1;
            continue;
        }
        let (Some(ea), Some(eb)) = (table.get(&pair.object_a), table.get(&pair.object_b)) else {
            res.missing_embedding += 1;
            continue;
        };
        let predicted = match (probe.predict(ea)?, probe.predict(eb)?) {
            (Prediction::Point(a), Prediction::Point(b)) => compare_points(a, b, opts.tau),
            (Prediction::Distribution(a), Prediction::Distribution(b)) => {
                compare_buckets(a.mode(), b.mode(), opts.bucket_window)
            }
            _ => unreachable!("one probe yields one prediction kind"),
        };
        res.scored += 1;
        res.correct += usize::from(predicted == pair.label);
    }
    if res.scored > 0 {
        res.accuracy = Some(res.correct as f64 / res.scored as f64);
    }
    Ok(res)
}

/// Source of predicted distributions for named objects.
pub trait Predictor {
    fn scheme(&self) -> &BucketScheme;

    /// `Ok(None)` when the object cannot be scored, e.g. it has no embedding.
    fn predict(&self, object: &str) -> Result<Option<EmpiricalDistribution>>;
}

pub struct ProbePredictor<'a> {
    pub probe: &'a TrainedProbe,
    pub table: &'a EmbeddingTable,
}

impl Predictor for ProbePredictor<'_> {
    fn scheme(&self) -> &BucketScheme {
        &self.probe.scheme
    }

    fn predict(&self, object: &str) -> Result<Option<EmpiricalDistribution>> {
        self.table
            .get(object)
            .map(|e| self.probe.predict_distribution(e))
            .transpose()
    }
}

/// The same distribution for every object, e.g. an aggregate baseline.
pub struct ConstantPredictor(pub EmpiricalDistribution);

impl Predictor for ConstantPredictor {
    fn scheme(&self) -> &BucketScheme {
        &self.0.scheme
    }

    fn predict(&self, _object: &str) -> Result<Option<EmpiricalDistribution>> {
        Ok(Some(self.0.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistribution {
    pub object: String,
    pub distribution: EmpiricalDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductEntry {
    object: String,
    #[serde(default)]
    prices: Option<Vec<f64>>,
    #[serde(default)]
    probs: Option<Vec<f64>>,
}

/// Reads a JSON array of products. Each entry names an `object` and gives
/// either raw `prices` (bucketed here, non-positive values skipped) or
/// ready-made bucket `probs` on `scheme`.
pub fn read_products<R: std::io::Read>(
    reader: R,
    scheme: &BucketScheme,
) -> Result<Vec<ProductDistribution>> {
    let entries: Vec<ProductEntry> = serde_json::from_reader(reader)?;
    entries
        .into_iter()
        .map(|e| {
            let distribution = match (e.prices, e.probs) {
                (Some(prices), None) => {
                    let records: Vec<ScalarRecord> = prices
                        .into_iter()
                        .filter(|p| p.is_finite() && *p > 0.0)
                        .map(|p| ScalarRecord::new(&e.object, Attribute::Price, p, 1))
                        .collect();
                    if records.is_empty() {
                        return Err(Error::InvalidArgument(format!(
                            "product {:?} has no positive prices",
                            e.object
                        )));
                    }
                    build_distribution(&records, scheme)?.0
                }
                (None, Some(probs)) => EmpiricalDistribution::from_probs(*scheme, probs)?,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "product {:?} needs exactly one of prices or probs",
                        e.object
                    )))
                }
            };
            Ok(ProductDistribution {
                object: e.object,
                distribution,
            })
        })
        .collect()
}

pub fn load_products(
    path: impl AsRef<Path>,
    scheme: &BucketScheme,
) -> Result<Vec<ProductDistribution>> {
    read_products(std::io::BufReader::new(std::fs::File::open(path)?), scheme)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PriceTransferResult {
    pub metrics: Option<MetricTriple>,
    pub scored: usize,
    pub missing: usize,
}

/// Mean metrics of `predictor` over the products, which must share its
/// power-of-4 scheme.
pub fn eval_price_transfer(
    predictor: &dyn Predictor,
    products: &[ProductDistribution],
    variant: MseVariant,
) -> Result<PriceTransferResult> {
    let scheme = predictor.scheme();
    if scheme.base != 4 {
        return Err(Error::Scheme(format!(
            "price transfer expects a base-4 scheme, got {scheme}"
        )));
    }
    let mut triples = Vec::with_capacity(products.len());
    let mut missing = 0;
    for p in products {
        scheme.ensure_same(&p.distribution.scheme)?;
        match predictor.predict(&p.object)? {
            Some(pred) => triples.push(MetricTriple::score(&pred, &p.distribution, variant)?),
            None => missing += 1,
        }
    }
    Ok(PriceTransferResult {
        metrics: MetricTriple::mean(&triples),
        scored: triples.len(),
        missing,
    })
}
