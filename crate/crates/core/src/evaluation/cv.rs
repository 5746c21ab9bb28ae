use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, confusion};
use crate::error::{Error, Result};
use crate::geodata::LabeledDataset;
use crate::learners::{fit_forest_with, ForestParams};
use crate::scalar::Scalar;
use crate::seed;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult<T> {
    pub fold_accuracies: Vec<T>,
    pub mean: T,
}

/// Validation indices per fold. Each class is shuffled and dealt round
/// robin, the second class continuing where the first stopped, so fold
/// sizes differ by at most one overall and per class.
pub fn fold_assignment<T: Scalar>(dataset: &LabeledDataset<T>, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = dataset.len();
    if k < 2 || k > n {
        return Err(Error::InvalidFoldCount { k, samples: n });
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| dataset.samples()[i].label == class).collect();
        idx.shuffle(&mut seed::stream(seed, &[u64::from(class)]));
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Stratified k-fold accuracy of a forest with fixed hyperparameters.
/// Fold `j` trains with seed `seed::derive(seed, [j])`.
pub fn cross_validate<T: Scalar>(
    dataset: &LabeledDataset<T>,
    params: &ForestParams,
    k: usize,
    seed: u64,
) -> Result<CvResult<T>> {
    let folds = fold_assignment(dataset, k, seed)?;
    let fold_accuracies = folds
        .par_iter()
        .enumerate()
        .map(|(j, validation)| {
            let mut in_fold = vec![false; dataset.len()];
            validation.iter().for_each(|&i| in_fold[i] = true);
            let train_idx: Vec<usize> = (0..dataset.len()).filter(|&i| !in_fold[i]).collect();
            let model = fit_forest_with(&dataset.subset(&train_idx), params, seed::derive(seed, &[j as u64]))?;
            let held_out = dataset.subset(validation);
            let cm = confusion(&model.predict_dataset(&held_out)?, &held_out.labels())?;
            accuracy::<T>(&cm)
        })
        .collect::<Result<Vec<T>>>()?;
    let mean = fold_accuracies.iter().fold(T::zero(), |a, &b| a + b) / T::of_count(k);
    Ok(CvResult { fold_accuracies, mean })
}
