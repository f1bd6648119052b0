//! Cross-validated probing experiments, report output and the zero-shot
//! transfer evaluations.

mod cv;
mod folds;
mod report;
mod transfer;

pub use cv::{
    build_targets, cross_validate, embedded_targets, fit_fold, run_cv, split_by_modality,
    train_probe, CvConfig, CvRun, FoldModel, ObjectScore, ObjectTarget,
};
pub use folds::{make_folds, FoldPlan, DEFAULT_FOLDS};
pub use report::{ConfigEcho, EvalReport, ReportFormat, ReportRow, Subset, BASELINE, CSV_HEADER};
pub use transfer::{
    compare_buckets, compare_points, eval_price_transfer, eval_relative, load_pairs, load_products,
    read_pairs, read_products, ConstantPredictor, Predictor, PriceTransferResult, ProbePredictor,
    ProductDistribution, RelativeLabel, RelativeOptions, RelativePair, RelativeResult, DEFAULT_TAU,
};
