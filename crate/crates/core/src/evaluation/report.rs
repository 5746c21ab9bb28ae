use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::CvResult;
use super::metrics::{accuracy, confusion, precision_recall, ClassMetrics, ConfusionMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct EvaluationReport<T> {
    pub confusion: ConfusionMatrix,
    pub accuracy: T,
    pub precision_macro: T,
    pub recall_macro: T,
    /// `[negative class, positive class]`
    pub per_class: [ClassMetrics<T>; 2],
    pub cv_fold_accuracies: Option<Vec<T>>,
    pub cv_mean_accuracy: Option<T>,
}

impl<T: Scalar> EvaluationReport<T> {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self> {
        let pr = precision_recall::<T>(&cm)?;
        Ok(EvaluationReport {
            confusion: cm,
            accuracy: accuracy(&cm)?,
            precision_macro: pr.macro_precision,
            recall_macro: pr.macro_recall,
            per_class: pr.per_class,
            cv_fold_accuracies: None,
            cv_mean_accuracy: None,
        })
    }

    pub fn with_cv(mut self, cv: CvResult<T>) -> Self {
        self.cv_fold_accuracies = Some(cv.fold_accuracies);
        self.cv_mean_accuracy = Some(cv.mean);
        self
    }
}

pub fn evaluate<T: Scalar>(predictions: &[u8], truth: &[u8]) -> Result<EvaluationReport<T>> {
    EvaluationReport::from_confusion(confusion(predictions, truth)?)
}

pub fn save_report<T: Scalar>(path: impl AsRef<Path>, report: &EvaluationReport<T>) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}
