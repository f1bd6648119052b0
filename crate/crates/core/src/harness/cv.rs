use serde::{Deserialize, Serialize};

use super::folds::{make_folds, FoldPlan, DEFAULT_FOLDS};
use super::report::{ConfigEcho, EvalReport, ReportRow, Subset, BASELINE};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::metrics::{aggregate_baseline, MetricTriple, MseVariant};
use crate::probe::{ProbeKind, Target, TrainConfig, TrainedProbe};
use crate::scalar::{
    build_distribution, detect_modality, log_median, Attribute, BucketScheme,
    EmpiricalDistribution, Modality, ModalityLabel, ModalityParams, ScalarDataset,
};

/// Everything the harness needs to know about one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTarget {
    pub object: String,
    pub distribution: EmpiricalDistribution,
    /// Base-10 log of the median value, the `rgr` target.
    pub log_median: f64,
    pub modality: ModalityLabel,
}

impl ObjectTarget {
    pub fn new(
        object: impl Into<String>,
        distribution: EmpiricalDistribution,
        log_median: f64,
        params: &ModalityParams,
    ) -> Self {
        let modality = detect_modality(&distribution, params);
        ObjectTarget {
            object: object.into(),
            distribution,
            log_median,
            modality,
        }
    }

    fn as_target(&self) -> Target<'_> {
        Target {
            distribution: &self.distribution,
            log_median: self.log_median,
        }
    }
}

/// Targets for every object of `attribute` in the dataset, sorted by name.
/// Objects without a single valid record are left out.
pub fn build_targets(
    dataset: &ScalarDataset,
    attribute: Attribute,
    scheme: &BucketScheme,
    params: &ModalityParams,
) -> Result<Vec<ObjectTarget>> {
    let mut out = Vec::new();
    for (object, records) in dataset.objects(attribute) {
        let valid: Vec<_> = records.iter().filter(|r| r.is_valid()).cloned().collect();
        if valid.is_empty() {
            continue;
        }
        let (distribution, _) = build_distribution(&valid, scheme)?;
        let median = log_median(&valid)?;
        out.push(ObjectTarget::new(object, distribution, median, params));
    }
    Ok(out)
}

/// Routes targets by modality: `(unimodal, multimodal)`.
pub fn split_by_modality(targets: &[ObjectTarget]) -> (Vec<&ObjectTarget>, Vec<&ObjectTarget>) {
    targets
        .iter()
        .partition(|t| t.modality.label == Modality::Unimodal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub attribute: Attribute,
    pub scheme: BucketScheme,
    pub probe: ProbeKind,
    /// Falls back to the probe's default strength.
    pub lambda: Option<f64>,
    pub n_folds: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub mse_variant: MseVariant,
    pub modality: ModalityParams,
}

impl CvConfig {
    pub fn new(attribute: Attribute, probe: ProbeKind) -> Self {
        CvConfig {
            attribute,
            scheme: BucketScheme::decimal(),
            probe,
            lambda: None,
            n_folds: DEFAULT_FOLDS,
            seed: 0,
            train: TrainConfig::default(),
            mse_variant: MseVariant::Density,
            modality: ModalityParams::default(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| self.probe.default_lambda())
    }
}

/// Parameters fitted on the training objects of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub probe: TrainedProbe,
    pub baseline: EmpiricalDistribution,
}

/// Scores of one held-out object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub fold: usize,
    pub modality: Modality,
    pub probe: MetricTriple,
    pub baseline: MetricTriple,
}

#[derive(Debug, Clone)]
pub struct CvRun {
    pub report: EvalReport,
    pub plan: FoldPlan,
    /// Aligned with the embedded targets, in object order.
    pub objects: Vec<String>,
    pub scores: Vec<ObjectScore>,
}

/// Targets that have an embedding, plus the number dropped.
pub fn embedded_targets<'a>(
    targets: &'a [ObjectTarget],
    table: &EmbeddingTable,
) -> (Vec<&'a ObjectTarget>, usize) {
    let kept: Vec<_> = targets
        .iter()
        .filter(|t| table.contains(&t.object))
        .collect();
    let dropped = targets.len() - kept.len();
    (kept, dropped)
}

/// Fits the probe and the aggregate baseline on every fold except `fold`.
/// Only training-fold embeddings are read.
pub fn fit_fold(
    targets: &[&ObjectTarget],
    table: &EmbeddingTable,
    plan: &FoldPlan,
    fold: usize,
    cfg: &CvConfig,
) -> Result<FoldModel> {
    let train: Vec<&ObjectTarget> = targets
        .iter()
        .copied()
        .filter(|t| plan.fold_of(&t.object).is_some_and(|f| f != fold))
        .collect();
    if train.is_empty() {
        return Err(Error::Empty("training fold"));
    }
    let probe = fit_probe(&train, table, cfg)?;
    let dists: Vec<EmpiricalDistribution> = train.iter().map(|t| t.distribution.clone()).collect();
    let baseline = aggregate_baseline(&dists)?;
    Ok(FoldModel { probe, baseline })
}

fn fit_probe(
    train: &[&ObjectTarget],
    table: &EmbeddingTable,
    cfg: &CvConfig,
) -> Result<TrainedProbe> {
    let names: Vec<&str> = train.iter().map(|t| t.object.as_str()).collect();
    let x = table.matrix(&names)?;
    let fit_targets: Vec<Target> = train.iter().map(|t| t.as_target()).collect();
    let mut probe = TrainedProbe::fit(
        cfg.probe,
        &x,
        &fit_targets,
        &cfg.scheme,
        cfg.lambda(),
        &cfg.train,
    )?;
    probe.attribute = Some(cfg.attribute);
    probe.encoder = Some(table.encoder_name.clone());
    Ok(probe)
}

/// Fits one probe on every embedded object of `cfg.attribute`.
/// Fold settings in `cfg` are ignored. Returns the probe and the number of
/// objects dropped for lack of an embedding.
pub fn train_probe(
    dataset: &ScalarDataset,
    table: &EmbeddingTable,
    cfg: &CvConfig,
) -> Result<(TrainedProbe, usize)> {
    let targets = build_targets(dataset, cfg.attribute, &cfg.scheme, &cfg.modality)?;
    let (kept, dropped) = embedded_targets(&targets, table);
    if kept.is_empty() {
        return Err(Error::Empty(
            "objects with both scalar data and an embedding",
        ));
    }
    Ok((fit_probe(&kept, table, cfg)?, dropped))
}

/// K-fold cross-validation over objects.
///
/// Metrics are pooled: each subset row averages the per-object scores of
/// every held-out object in that subset across all folds.
pub fn cross_validate(
    targets: &[ObjectTarget],
    table: &EmbeddingTable,
    cfg: &CvConfig,
) -> Result<CvRun> {
    for t in targets {
        cfg.scheme.ensure_same(&t.distribution.scheme)?;
    }
    let (kept, dropped) = embedded_targets(targets, table);
    if kept.is_empty() {
        return Err(Error::Empty(
            "objects with both a distribution and an embedding",
        ));
    }
    let objects: Vec<String> = kept.iter().map(|t| t.object.clone()).collect();
    let plan = make_folds(&objects, cfg.seed, cfg.n_folds)?;

    let fold_results: Vec<Result<Vec<(usize, ObjectScore)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.n_folds)
            .map(|fold| {
                let kept = &kept;
                let plan = &plan;
                s.spawn(move || score_fold(kept, table, plan, fold, cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold worker panicked"))
            .collect()
    });
    let mut indexed = Vec::with_capacity(kept.len());
    for r in fold_results {
        indexed.extend(r?);
    }
    indexed.sort_by_key(|(i, _)| *i);
    let scores: Vec<ObjectScore> = indexed.into_iter().map(|(_, s)| s).collect();

    let mut rows = Vec::new();
    for subset in Subset::ALL {
        let members: Vec<&ObjectScore> = scores
            .iter()
            .filter(|s| match subset {
                Subset::All => true,
                Subset::Unimodal => s.modality == Modality::Unimodal,
                Subset::Multimodal => s.modality == Modality::Multimodal,
            })
            .collect();
        let probe: Vec<MetricTriple> = members.iter().map(|s| s.probe).collect();
        let base: Vec<MetricTriple> = members.iter().map(|s| s.baseline).collect();
        for (name, triples) in [(cfg.probe.as_str(), probe), (BASELINE, base)] {
            rows.push(ReportRow {
                attribute: cfg.attribute,
                encoder: table.encoder_name.clone(),
                probe: name.to_string(),
                subset,
                n: triples.len(),
                metrics: MetricTriple::mean(&triples),
            });
        }
    }

    let config = ConfigEcho {
        probe: cfg.probe,
        lambda: cfg.lambda(),
        scheme: cfg.scheme,
        seed: cfg.seed,
        n_folds: cfg.n_folds,
        train: cfg.train,
        mse_variant: cfg.mse_variant,
        emd_divisor: cfg.scheme.count,
        modality: cfg.modality,
        n_objects: kept.len(),
        dropped_objects: dropped,
    };
    Ok(CvRun {
        report: EvalReport::new(config, rows),
        plan,
        objects,
        scores,
    })
}

fn score_fold(
    kept: &[&ObjectTarget],
    table: &EmbeddingTable,
    plan: &FoldPlan,
    fold: usize,
    cfg: &CvConfig,
) -> Result<Vec<(usize, ObjectScore)>> {
    let model = fit_fold(kept, table, plan, fold, cfg)?;
    let mut out = Vec::new();
    for (i, t) in kept.iter().enumerate() {
        if plan.fold_of(&t.object) != Some(fold) {
            continue;
        }
        let embedding = table.get(&t.object).expect("kept objects are embedded");
        let predicted = model.probe.predict_distribution(embedding)?;
        out.push((
            i,
            ObjectScore {
                fold,
                modality: t.modality.label,
                probe: MetricTriple::score(&predicted, &t.distribution, cfg.mse_variant)?,
                baseline: MetricTriple::score(&model.baseline, &t.distribution, cfg.mse_variant)?,
            },
        ));
    }
    Ok(out)
}

/// Builds targets from `dataset` and cross-validates them.
pub fn run_cv(
    dataset: &ScalarDataset,
    table: &EmbeddingTable,
    cfg: &CvConfig,
) -> Result<EvalReport> {
    let targets = build_targets(dataset, cfg.attribute, &cfg.scheme, &cfg.modality)?;
    Ok(cross_validate(&targets, table, cfg)?.report)
}
