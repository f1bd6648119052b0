mod common;

use proptest::prelude::*;
use rand::Rng;
use scalar_probe::metrics::{aggregate_baseline, density_mse, emd, MetricTriple, MseVariant};
use scalar_probe::scalar::{BucketScheme, EmpiricalDistribution};

fn dist_strategy() -> impl Strategy<Value = EmpiricalDistribution> {
    prop::collection::vec(0.0..1.0f64, 12)
        .prop_filter("some mass", |v| v.iter().sum::<f64>() > 1e-6)
        .prop_map(|v| {
            let total: f64 = v.iter().sum();
            EmpiricalDistribution::from_probs(
                BucketScheme::decimal(),
                v.into_iter().map(|x| x / total).collect(),
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn mse_bounded_by_two_over_k(p in dist_strategy(), q in dist_strategy()) {
        prop_assert!(density_mse(&p, &q).unwrap() <= 2.0 / 12.0 + 1e-15);
    }

    #[test]
    fn emd_bounded_by_span(p in dist_strategy(), q in dist_strategy()) {
        let d = emd(&p, &q).unwrap();
        prop_assert!((0.0..=11.0 + 1e-12).contains(&d));
    }
}

#[test]
fn mse_bound_attained_by_disjoint_point_masses() {
    let s = BucketScheme::decimal();
    for a in -2..10 {
        for b in -2..10 {
            let v = density_mse(
                &EmpiricalDistribution::point_mass(s, a),
                &EmpiricalDistribution::point_mass(s, b),
            )
            .unwrap();
            let want = if a == b { 0.0 } else { 2.0 / 12.0 };
            assert!((v - want).abs() < 1e-15);
        }
    }
}

/// Moving eps of mass one bucket further from a point-mass truth raises emd
/// by exactly eps, while the mse change does not depend on which far bucket
/// received the mass.
#[test]
fn emd_sees_distance_mse_does_not() {
    let s = BucketScheme::decimal();
    let truth = EmpiricalDistribution::point_mass(s, 0);
    let eps = 0.05;
    let mut mse_changes = Vec::new();
    for target in 4..9 {
        // Prediction with eps sitting at `target`, then moved to `target + 1`.
        let mut near = vec![0.0; 12];
        near[s.index_of(0).unwrap()] = 1.0 - eps;
        near[s.index_of(target).unwrap()] = eps;
        let near = EmpiricalDistribution::from_probs(s, near).unwrap();
        let mut far = near.probs.clone();
        far[s.index_of(target).unwrap()] = 0.0;
        far[s.index_of(target + 1).unwrap()] = eps;
        let far = EmpiricalDistribution::from_probs(s, far).unwrap();
        let d_emd = emd(&far, &truth).unwrap() - emd(&near, &truth).unwrap();
        assert!((d_emd - eps).abs() < 1e-12, "{d_emd}");
        mse_changes.push(density_mse(&far, &truth).unwrap() - density_mse(&near, &truth).unwrap());
        // Sending the mass anywhere away from the truth costs the same under mse.
        let mse_at = |label: i32| {
            let mut v = vec![0.0; 12];
            v[s.index_of(0).unwrap()] = 1.0 - eps;
            v[s.index_of(label).unwrap()] = eps;
            density_mse(&EmpiricalDistribution::from_probs(s, v).unwrap(), &truth).unwrap()
        };
        assert!((mse_at(1) - mse_at(target)).abs() < 1e-15);
    }
    assert!(mse_changes.iter().all(|c| c.abs() < 1e-15));
}

#[test]
fn baseline_minimizes_mean_mse_among_constants() {
    let s = BucketScheme::decimal();
    let mut rng = common::rng(20);
    let train: Vec<_> = (0..25)
        .map(|_| common::random_distribution(&mut rng, s))
        .collect();
    let base = aggregate_baseline(&train).unwrap();
    let mean_mse = |p: &EmpiricalDistribution| {
        train
            .iter()
            .map(|t| density_mse(p, t).unwrap())
            .sum::<f64>()
            / train.len() as f64
    };
    let at_base = mean_mse(&base);
    for _ in 0..500 {
        let i = rng.random_range(0..12);
        let j = rng.random_range(0..12);
        if i == j {
            continue;
        }
        let delta = if rng.random_bool(0.5) { 1e-3 } else { -1e-3 };
        let mut probs = base.probs.clone();
        probs[i] += delta;
        probs[j] -= delta;
        if probs[i] < 0.0 || probs[j] < 0.0 {
            continue;
        }
        let perturbed = EmpiricalDistribution::from_probs(s, probs).unwrap();
        assert!(mean_mse(&perturbed) >= at_base - 1e-12);
    }
}

#[test]
fn triple_mean_matches_componentwise_mean() {
    let s = BucketScheme::decimal();
    let truth = EmpiricalDistribution::point_mass(s, 3);
    let a = MetricTriple::score(&truth, &truth, MseVariant::Density).unwrap();
    let b = MetricTriple::score(
        &EmpiricalDistribution::point_mass(s, 5),
        &truth,
        MseVariant::Density,
    )
    .unwrap();
    let m = MetricTriple::mean(&[a, b]).unwrap();
    assert_eq!(m.accuracy, 0.5);
    assert_eq!(m.emd_unnormalized, 1.0);
    assert!(MetricTriple::mean(&[]).is_none());
}
