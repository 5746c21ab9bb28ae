//! Splits, metrics, cross-validation and the hyperparameter sweep.

mod cv;
mod metrics;
mod report;
mod split;
mod sweep;

pub use cv::{cross_validate, fold_assignment, CvResult, DEFAULT_FOLDS};
pub use metrics::{accuracy, confusion, precision_recall, ClassMetrics, ConfusionMatrix, MetricValue, PrecisionRecall};
pub use report::{evaluate, save_report, EvaluationReport};
pub use split::{stratified_split, DEFAULT_TRAIN_FRACTION};
pub use sweep::{tune_sweep, tune_sweep_range, write_sweep_csv, TuningCell, TuningResult, SWEEP_MAX};
