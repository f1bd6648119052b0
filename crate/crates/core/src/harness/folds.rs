use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

/// Object-level fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub n_folds: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, object: &str) -> Option<usize> {
        self.assignments.get(object).copied()
    }

    /// Objects of fold `k`, sorted.
    pub fn members(&self, k: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == k)
            .map(|(o, _)| o.as_str())
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in self.assignments.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Sorts and deduplicates the objects, shuffles them with a ChaCha8 stream
/// seeded by `seed`, then deals them round-robin into `n_folds` folds.
pub fn make_folds<S: AsRef<str>>(objects: &[S], seed: u64, n_folds: usize) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    let mut sorted: Vec<&str> = objects.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < n_folds {
        return Err(Error::InvalidArgument(format!(
            "{} objects cannot fill {n_folds} folds",
            sorted.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let assignments = sorted
        .into_iter()
        .enumerate()
        .map(|(i, o)| (o.to_string(), i % n_folds))
        .collect();
    Ok(FoldPlan {
        seed,
        n_folds,
        assignments,
    })
}
