use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value type for metrics. Satisfied by `f32`, `f64` and exact rationals
/// such as `num_rational::Ratio<i64>`.
pub trait MetricValue: Num + FromPrimitive + Clone {}

impl<T: Num + FromPrimitive + Clone> MetricValue for T {}

/// Binary confusion counts; the positive class is 1 (hotspot / wildfire).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    #[serde(rename = "tp")]
    pub true_positive: u64,
    #[serde(rename = "tn")]
    pub true_negative: u64,
    #[serde(rename = "fp")]
    pub false_positive: u64,
    #[serde(rename = "fn")]
    pub false_negative: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix {
            true_positive: tp,
            true_negative: tn,
            false_positive: fp,
            false_negative: fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positive + self.true_negative + self.false_positive + self.false_negative
    }

    pub fn correct(&self) -> u64 {
        self.true_positive + self.true_negative
    }
}

pub fn confusion(predictions: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (1, 1) => cm.true_positive += 1,
            (0, 0) => cm.true_negative += 1,
            (1, 0) => cm.false_positive += 1,
            (0, 1) => cm.false_negative += 1,
            _ => {
                return Err(Error::invalid(
                    "label",
                    format!("labels must be 0 or 1, got ({p}, {t})"),
                ))
            }
        }
    }
    Ok(cm)
}

fn count<T: MetricValue>(n: u64) -> T {
    T::from_u64(n).expect("count fits the metric type")
}

/// `num / den`, or 1 when nothing was predicted / present.
fn ratio_or_one<T: MetricValue>(num: u64, den: u64) -> T {
    if den == 0 {
        T::one()
    } else {
        count::<T>(num) / count::<T>(den)
    }
}

/// `(tp + tn) / total`
pub fn accuracy<T: MetricValue>(cm: &ConfusionMatrix) -> Result<T> {
    match cm.total() {
        0 => Err(Error::EmptyMatrix),
        total => Ok(count::<T>(cm.correct()) / count::<T>(total)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<T> {
    pub precision: T,
    pub recall: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall<T> {
    /// Indexed by class: `[0]` negatives, `[1]` positives.
    pub per_class: [ClassMetrics<T>; 2],
    pub macro_precision: T,
    pub macro_recall: T,
}

/// Per-class precision and recall and their unweighted means. A class
/// never predicted has precision 1; a class never present has recall 1.
pub fn precision_recall<T: MetricValue>(cm: &ConfusionMatrix) -> Result<PrecisionRecall<T>> {
    if cm.total() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let ConfusionMatrix {
        true_positive: tp,
        true_negative: tn,
        false_positive: fp,
        false_negative: fn_,
    } = *cm;
    let positive = ClassMetrics {
        precision: ratio_or_one::<T>(tp, tp + fp),
        recall: ratio_or_one::<T>(tp, tp + fn_),
    };
    let negative = ClassMetrics {
        precision: ratio_or_one::<T>(tn, tn + fn_),
        recall: ratio_or_one::<T>(tn, tn + fp),
    };
    let two = T::one() + T::one();
    Ok(PrecisionRecall {
        macro_precision: (negative.precision.clone() + positive.precision.clone()) / two.clone(),
        macro_recall: (negative.recall.clone() + positive.recall.clone()) / two,
        per_class: [negative, positive],
    })
}
