//! Peak counting on kernel-smoothed bucket distributions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::EmpiricalDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalityParams {
    /// Gaussian kernel standard deviation, in buckets.
    pub bandwidth: f64,
    /// Spacing of the evaluation grid, in buckets.
    pub grid_step: f64,
    /// Minimum rise of a peak above the valleys on either side.
    pub prominence: f64,
}

impl Default for ModalityParams {
    fn default() -> Self {
        ModalityParams {
            bandwidth: 0.75,
            grid_step: 0.05,
            prominence: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Unimodal,
    Multimodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalityLabel {
    pub n_peaks: usize,
    pub label: Modality,
}

impl ModalityLabel {
    pub fn from_peaks(n_peaks: usize) -> Self {
        let n_peaks = n_peaks.max(1);
        ModalityLabel {
            n_peaks,
            label: if n_peaks == 1 {
                Modality::Unimodal
            } else {
                Modality::Multimodal
            },
        }
    }
}

/// Gaussian-smoothed density of `dist` on a grid one bucket wider than the
/// label range on each side. Returns `(position, density)` pairs.
pub fn smoothed_density(dist: &EmpiricalDistribution, params: &ModalityParams) -> Vec<(f64, f64)> {
    let scheme = dist.scheme;
    let lo = scheme.min_exp as f64 - 1.0;
    let hi = scheme.max_label() as f64 + 1.0;
    let steps = ((hi - lo) / params.grid_step).round() as usize;
    let h = params.bandwidth;
    let norm = 1.0 / (h * (2.0 * PI).sqrt());
    (0..=steps)
        .map(|j| {
            let x = lo + j as f64 * params.grid_step;
            let y = dist
                .probs
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(i, p)| {
                    let z = (x - scheme.label_of(i) as f64) / h;
                    p * (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm;
            (x, y)
        })
        .collect()
}

/// Counts the peaks of the smoothed distribution by climbing the grid and
/// discarding bumps that rise less than `prominence` above a neighbouring
/// valley. Always reports at least one peak.
pub fn detect_modality(dist: &EmpiricalDistribution, params: &ModalityParams) -> ModalityLabel {
    let density: Vec<f64> = smoothed_density(dist, params)
        .into_iter()
        .map(|(_, y)| y)
        .collect();
    ModalityLabel::from_peaks(count_prominent_peaks(&density, params.prominence))
}

#[derive(Debug, Clone, Copy)]
struct Extremum {
    value: f64,
    peak: bool,
}

fn count_prominent_peaks(values: &[f64], prominence: f64) -> usize {
    let mut plateau: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if plateau.last() != Some(&v) {
            plateau.push(v);
        }
    }
    if plateau.len() <= 1 {
        return 1;
    }

    let n = plateau.len();
    let mut extrema = Vec::new();
    for i in 0..n {
        let left = if i == 0 { None } else { Some(plateau[i - 1]) };
        let right = plateau.get(i + 1).copied();
        let v = plateau[i];
        let above = |o: Option<f64>| o.is_none_or(|o| v > o);
        let below = |o: Option<f64>| o.is_none_or(|o| v < o);
        if above(left) && above(right) {
            extrema.push(Extremum {
                value: v,
                peak: true,
            });
        } else if below(left) && below(right) {
            extrema.push(Extremum {
                value: v,
                peak: false,
            });
        }
    }

    // Repeatedly drop the shallowest peak/valley pair. Removing the globally
    // smallest pair keeps the lower valley and the higher peak around it.
    while extrema.len() > 1 {
        let (idx, diff) = extrema
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, (w[0].value - w[1].value).abs()))
            .fold(
                (0, f64::INFINITY),
                |best, cur| if cur.1 < best.1 { cur } else { best },
            );
        if diff >= prominence {
            break;
        }
        extrema.drain(idx..idx + 2);
    }
    extrema.iter().filter(|e| e.peak).count()
}
