//! Distribution-level evaluation metrics.
//!
//! Every metric compares a predicted bucket distribution with an object's
//! empirical one. `emd` is the 1-D Wasserstein-1 distance with unit spacing
//! between adjacent buckets; reports divide it by the bucket count and keep
//! the raw value next to it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::EmpiricalDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MseVariant {
    /// Mean squared difference of bucket probabilities.
    #[default]
    Density,
    /// Mean squared difference of cumulative probabilities.
    Cdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricTriple {
    pub accuracy: f64,
    pub mse: f64,
    /// Earth mover's distance divided by the bucket count.
    pub emd: f64,
    pub emd_unnormalized: f64,
}

impl MetricTriple {
    /// Scores one prediction against one truth distribution.
    pub fn score(
        predicted: &EmpiricalDistribution,
        truth: &EmpiricalDistribution,
        variant: MseVariant,
    ) -> Result<Self> {
        let accuracy = bucket_accuracy(predicted, truth)?;
        let mse = match variant {
            MseVariant::Density => density_mse(predicted, truth)?,
            MseVariant::Cdf => cdf_mse(predicted, truth)?,
        };
        let raw = emd(predicted, truth)?;
        Ok(MetricTriple {
            accuracy,
            mse,
            emd: raw / predicted.scheme.count as f64,
            emd_unnormalized: raw,
        })
    }

    /// Unweighted mean; `None` for an empty slice.
    pub fn mean(items: &[MetricTriple]) -> Option<MetricTriple> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let mut acc = MetricTriple::default();
        for m in items {
            acc.accuracy += m.accuracy;
            acc.mse += m.mse;
            acc.emd += m.emd;
            acc.emd_unnormalized += m.emd_unnormalized;
        }
        Some(MetricTriple {
            accuracy: acc.accuracy / n,
            mse: acc.mse / n,
            emd: acc.emd / n,
            emd_unnormalized: acc.emd_unnormalized / n,
        })
    }
}

/// One unit of mass moved between two bucket indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

/// Mass left in place is not listed, so equal inputs give an empty plan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransportPlan {
    pub flows: Vec<Flow>,
}

impl TransportPlan {
    pub fn cost(&self) -> f64 {
        self.flows
            .iter()
            .map(|f| f.mass * f.from.abs_diff(f.to) as f64)
            .sum()
    }

    /// Checks that the plan turns `p` into `q`: for every bucket, net outflow
    /// equals `p_i - q_i` within `tol`.
    pub fn moves(&self, p: &[f64], q: &[f64], tol: f64) -> bool {
        if p.len() != q.len() {
            return false;
        }
        let mut net = vec![0.0; p.len()];
        for f in &self.flows {
            if f.mass < 0.0 || f.from >= p.len() || f.to >= p.len() {
                return false;
            }
            net[f.from] += f.mass;
            net[f.to] -= f.mass;
        }
        net.iter()
            .zip(p.iter().zip(q))
            .all(|(n, (a, b))| (n - (a - b)).abs() <= tol)
    }
}

/// 1 when the argmax buckets agree, else 0. Ties go to the lower label.
pub fn bucket_accuracy(
    predicted: &EmpiricalDistribution,
    truth: &EmpiricalDistribution,
) -> Result<f64> {
    predicted.scheme.ensure_same(&truth.scheme)?;
    Ok(if predicted.argmax_index() == truth.argmax_index() {
        1.0
    } else {
        0.0
    })
}

pub fn density_mse(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> Result<f64> {
    p.scheme.ensure_same(&q.scheme)?;
    Ok(mean_sq_diff(&p.probs, &q.probs))
}

pub fn cdf_mse(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> Result<f64> {
    p.scheme.ensure_same(&q.scheme)?;
    Ok(mean_sq_diff(&p.cdf(), &q.cdf()))
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    sum / a.len() as f64
}

/// Unnormalized earth mover's distance, `sum_i |CDF_p(i) - CDF_q(i)|`.
pub fn emd(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> Result<f64> {
    p.scheme.ensure_same(&q.scheme)?;
    Ok(emd_slices(&p.probs, &q.probs))
}

fn emd_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut total = 0.0;
    // The last CDF entries are both 1 and contribute nothing.
    for (a, b) in p.iter().zip(q).take(p.len().saturating_sub(1)) {
        diff += a - b;
        total += diff.abs();
    }
    total
}

/// Optimal transport by a left-to-right sweep that always ships the leftmost
/// remaining supply to the leftmost remaining demand. In one dimension with
/// cost `|i - j|` this greedy plan is optimal, so it serves as an independent
/// check on [`emd`].
pub fn brute_force_emd(
    p: &EmpiricalDistribution,
    q: &EmpiricalDistribution,
) -> Result<(f64, TransportPlan)> {
    p.scheme.ensure_same(&q.scheme)?;
    let mut supply = p.probs.clone();
    let mut demand = q.probs.clone();
    let k = supply.len();
    let mut plan = TransportPlan::default();
    let (mut i, mut j) = (0, 0);
    while i < k && j < k {
        if supply[i] <= 0.0 {
            i += 1;
            continue;
        }
        if demand[j] <= 0.0 {
            j += 1;
            continue;
        }
        let mass = supply[i].min(demand[j]);
        if i != j {
            plan.flows.push(Flow {
                from: i,
                to: j,
                mass,
            });
        }
        if supply[i] <= demand[j] {
            demand[j] -= mass;
            supply[i] = 0.0;
            i += 1;
        } else {
            supply[i] -= mass;
            demand[j] = 0.0;
            j += 1;
        }
    }
    Ok((plan.cost(), plan))
}

/// `0.5 * sum_i |p_i - q_i|`.
pub fn total_variation(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> Result<f64> {
    p.scheme.ensure_same(&q.scheme)?;
    Ok(0.5
        * p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Per-bucket mean of the training distributions, used as a constant
/// prediction for every test object.
pub fn aggregate_baseline(train: &[EmpiricalDistribution]) -> Result<EmpiricalDistribution> {
    let first = train.first().ok_or(Error::Empty("baseline training set"))?;
    let mut probs = vec![0.0; first.probs.len()];
    for d in train {
        first.scheme.ensure_same(&d.scheme)?;
        probs.iter_mut().zip(&d.probs).for_each(|(a, b)| *a += b);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= total);
    EmpiricalDistribution::from_probs(first.scheme, probs)
}

/// Expected accuracy of predicting by sampling from each object's own
/// distribution and scoring against its mode: the mean modal mass.
pub fn sampling_upper_bound(dists: &[EmpiricalDistribution]) -> Result<f64> {
    if dists.is_empty() {
        return Err(Error::Empty("distribution set"));
    }
    let sum: f64 = dists.iter().map(|d| d.probs[d.argmax_index()]).sum();
    Ok(sum / dists.len() as f64)
}
