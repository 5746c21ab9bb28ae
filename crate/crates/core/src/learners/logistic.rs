use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{LabeledDataset, TaskSchema};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            learning_rate: 0.1,
            epochs: 500,
        }
    }
}

/// Linear classifier on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LogisticModel<T> {
    pub schema: TaskSchema,
    pub weights: Vec<T>,
    pub bias: T,
    /// Per-feature `(mean, stddev)`; zero-variance features carry stddev 1.
    pub standardization: Vec<(T, T)>,
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LogisticModel<T> {
    fn standardize<'a>(&'a self, x: &'a [T]) -> impl Iterator<Item = T> + 'a {
        x.iter().zip(&self.standardization).map(|(&v, &(m, s))| (v - m) / s)
    }

    pub fn logit(&self, x: &[T]) -> Result<T> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(self
            .standardize(x)
            .zip(&self.weights)
            .fold(self.bias, |acc, (v, &w)| acc + v * w))
    }

    pub fn probability(&self, x: &[T]) -> Result<T> {
        self.logit(x).map(sigmoid)
    }

    /// Positive when the probability is at least one half.
    pub fn predict(&self, x: &[T]) -> Result<u8> {
        Ok(u8::from(self.probability(x)? >= T::of(0.5)))
    }

    pub fn predict_dataset(&self, dataset: &LabeledDataset<T>) -> Result<Vec<u8>> {
        dataset.samples().iter().map(|s| self.predict(&s.features)).collect()
    }
}

/// Full-batch gradient descent on mean log loss from zero weights.
pub fn fit_logistic<T: Scalar>(dataset: &LabeledDataset<T>, params: &LogisticParams) -> Result<LogisticModel<T>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(params.learning_rate > 0.0) {
        return Err(Error::invalid("learning_rate", "must be positive"));
    }
    let d = dataset.n_features();
    let n = T::of_count(dataset.len());

    let standardization: Vec<(T, T)> = (0..d)
        .map(|j| {
            let mean = dataset.samples().iter().fold(T::zero(), |a, s| a + s.features[j]) / n;
            let var = dataset
                .samples()
                .iter()
                .fold(T::zero(), |a, s| a + (s.features[j] - mean).powi(2))
                / n;
            let sd = var.sqrt();
            (mean, if sd > T::zero() && sd.is_finite() { sd } else { T::one() })
        })
        .collect();

    let xs: Vec<Vec<T>> = dataset
        .samples()
        .iter()
        .map(|s| {
            s.features
                .iter()
                .zip(&standardization)
                .map(|(&v, &(m, sd))| (v - m) / sd)
                .collect()
        })
        .collect();
    let ys: Vec<T> = dataset.samples().iter().map(|s| T::of(f64::from(s.label))).collect();

    let lr = T::of(params.learning_rate);
    let mut weights = vec![T::zero(); d];
    let mut bias = T::zero();
    let mut grad = vec![T::zero(); d];
    for _ in 0..params.epochs {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut grad_b = T::zero();
        for (x, &y) in xs.iter().zip(&ys) {
            let z = x.iter().zip(&weights).fold(bias, |a, (&v, &w)| a + v * w);
            let err = sigmoid(z) - y;
            for (g, &v) in grad.iter_mut().zip(x) {
                *g = *g + err * v;
            }
            grad_b = grad_b + err;
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w = *w - lr * *g / n;
        }
        bias = bias - lr * grad_b / n;
    }

    Ok(LogisticModel {
        schema: dataset.schema,
        weights,
        bias,
        standardization,
    })
}
