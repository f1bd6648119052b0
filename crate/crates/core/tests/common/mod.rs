//! Synthetic datasets shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use scalar_probe::embedding::EmbeddingTable;
use scalar_probe::scalar::{
    Attribute, BucketScheme, EmpiricalDistribution, ScalarDataset, ScalarRecord,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random unit vector.
pub fn direction(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

pub fn random_distribution(rng: &mut impl Rng, scheme: BucketScheme) -> EmpiricalDistribution {
    let mut probs: Vec<f64> = (0..scheme.count).map(|_| rng.random::<f64>()).collect();
    // Sparse supports exercise the zero-mass paths.
    for p in probs.iter_mut() {
        if rng.random::<f64>() < 0.3 {
            *p = 0.0;
        }
    }
    if probs.iter().all(|p| *p == 0.0) {
        probs[rng.random_range(0..scheme.count)] = 1.0;
    }
    let total: f64 = probs.iter().sum();
    EmpiricalDistribution::from_probs(scheme, probs.into_iter().map(|p| p / total).collect())
        .unwrap()
}

pub struct Synthetic {
    pub dataset: ScalarDataset,
    pub table: EmbeddingTable,
    /// Bucket label each object's records fall in (the lower one for split objects).
    pub labels: Vec<(String, i32)>,
    /// Unit direction carrying the (lower) label.
    pub direction: Vec<f64>,
}

/// Objects whose records all fall in one decimal bucket. A fixed unit
/// direction `u` carries `label + noise * N(0, 1)`. The orthogonal complement
/// carries label-free Gaussian content with per-dimension scale `distractor`.
pub fn linear_point_masses(
    n: usize,
    dim: usize,
    noise: f64,
    distractor: f64,
    seed: u64,
) -> Synthetic {
    let scheme = BucketScheme::decimal();
    let mut rng = rng(seed);
    let u = direction(&mut rng, dim);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut records = Vec::new();
    let mut table = EmbeddingTable::new("synthetic-linear", dim).unwrap();
    let mut labels = Vec::new();
    for i in 0..n {
        let name = format!("obj{i:05}");
        let label = rng.random_range(scheme.min_exp..=scheme.max_label());
        for _ in 0..3 {
            let log = label as f64 + rng.random_range(-0.4..0.4);
            records.push(ScalarRecord::new(
                &name,
                Attribute::Mass,
                10f64.powf(log),
                50,
            ));
        }
        let signal = label as f64 + noise * unit.sample(&mut rng);
        let g: Vec<f64> = (0..dim)
            .map(|_| distractor * unit.sample(&mut rng))
            .collect();
        let along: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
        let emb: Vec<f64> = u
            .iter()
            .zip(&g)
            .map(|(ui, gi)| signal * ui + gi - along * ui)
            .collect();
        table.insert(&name, emb).unwrap();
        labels.push((name, label));
    }
    Synthetic {
        dataset: ScalarDataset::from_records(records),
        table,
        labels,
        direction: u,
    }
}

/// Accuracy of rounding the exact projection onto the signal direction,
/// i.e. the Bayes rule for [`linear_point_masses`] when `u` is known.
pub fn projection_accuracy(data: &Synthetic) -> f64 {
    let scheme = BucketScheme::decimal();
    let correct = data
        .labels
        .iter()
        .filter(|(name, label)| {
            let e = data.table.get(name).unwrap();
            let s: f64 = e.iter().zip(&data.direction).map(|(a, b)| a * b).sum();
            scheme.clamp(s.round() as i64) == *label
        })
        .count();
    correct as f64 / data.labels.len() as f64
}

/// Objects whose mass splits evenly between buckets `label` and `label + gap`.
/// The embedding encodes `label` along one direction and `label + gap` along
/// another, plus isotropic noise.
pub fn bimodal(n: usize, dim: usize, gap: i32, noise: f64, seed: u64) -> Synthetic {
    let scheme = BucketScheme::decimal();
    let mut rng = rng(seed);
    let u = direction(&mut rng, dim);
    let v = direction(&mut rng, dim);
    let normal = Normal::new(0.0, noise).unwrap();
    let mut records = Vec::new();
    let mut table = EmbeddingTable::new("synthetic-bimodal", dim).unwrap();
    let mut labels = Vec::new();
    for i in 0..n {
        let name = format!("obj{i:05}");
        let low = rng.random_range(scheme.min_exp..=scheme.max_label() - gap);
        let high = low + gap;
        for mode in [low, high] {
            let log = mode as f64 + rng.random_range(-0.3..0.3);
            records.push(ScalarRecord::new(
                &name,
                Attribute::Mass,
                10f64.powf(log),
                60,
            ));
        }
        let emb: Vec<f64> = u
            .iter()
            .zip(&v)
            .map(|(ui, vi)| low as f64 * ui + high as f64 * vi + normal.sample(&mut rng))
            .collect();
        table.insert(&name, emb).unwrap();
        labels.push((name, low));
    }
    Synthetic {
        dataset: ScalarDataset::from_records(records),
        table,
        labels,
        direction: u,
    }
}
