use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::LabeledDataset;
use crate::learners::{fit_forest, TreeNode};
use crate::scalar::Scalar;

/// Upper end of both sweep axes.
pub const SWEEP_MAX: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningCell<T> {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub train_accuracy: T,
    pub test_accuracy: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TuningResult<T> {
    /// Ordered by `n_estimators`, then `max_depth`.
    pub grid: Vec<TuningCell<T>>,
    pub best: TuningCell<T>,
}

impl<T: Scalar> TuningResult<T> {
    pub fn cell(&self, n_estimators: usize, max_depth: usize) -> Option<&TuningCell<T>> {
        self.grid
            .iter()
            .find(|c| c.n_estimators == n_estimators && c.max_depth == max_depth)
    }
}

/// Majority-vote accuracy of every tree prefix `1..=trees.len()`.
fn prefix_accuracies<T: Scalar>(trees: &[TreeNode<T>], data: &LabeledDataset<T>) -> Vec<T> {
    let mut votes = vec![0usize; data.len()];
    let mut out = Vec::with_capacity(trees.len());
    for (n, tree) in trees.iter().enumerate().map(|(i, t)| (i + 1, t)) {
        let mut correct = 0usize;
        for (v, s) in votes.iter_mut().zip(data.samples()) {
            *v += usize::from(tree.predict(&s.features));
            correct += usize::from(u8::from(2 * *v >= n) == s.label);
        }
        out.push(T::of_count(correct) / T::of_count(data.len()));
    }
    out
}

/// Train/test accuracy over `n_estimators, max_depth ∈ [1, 15]`.
pub fn tune_sweep<T: Scalar>(
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    seed: u64,
) -> Result<TuningResult<T>> {
    tune_sweep_range(train, test, seed, SWEEP_MAX, SWEEP_MAX)
}

/// Every cell uses the same seed, so the forest at `(n, d)` is the first
/// `n` trees of the forest at `(max_n, d)`; one forest per depth is grown
/// and its prefixes scored. The best cell maximises test accuracy, ties
/// going to fewer trees and then to shallower trees.
pub fn tune_sweep_range<T: Scalar>(
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    seed: u64,
    max_n: usize,
    max_depth: usize,
) -> Result<TuningResult<T>> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if max_n == 0 || max_depth == 0 {
        return Err(Error::invalid("sweep range", "both axes need at least one value"));
    }
    let per_depth: Vec<(Vec<T>, Vec<T>)> = (1..=max_depth)
        .into_par_iter()
        .map(|depth| {
            let forest = fit_forest(train, max_n, depth, seed)?;
            Ok((
                prefix_accuracies(forest.trees(), train),
                prefix_accuracies(forest.trees(), test),
            ))
        })
        .collect::<Result<_>>()?;

    let mut grid = Vec::with_capacity(max_n * max_depth);
    for n in 1..=max_n {
        for (d, (tr, te)) in per_depth.iter().enumerate() {
            grid.push(TuningCell {
                n_estimators: n,
                max_depth: d + 1,
                train_accuracy: tr[n - 1],
                test_accuracy: te[n - 1],
            });
        }
    }
    let best = grid
        .iter()
        .copied()
        .reduce(|best, c| if c.test_accuracy > best.test_accuracy { c } else { best })
        .expect("grid is nonempty");
    Ok(TuningResult { grid, best })
}

/// `n_estimators,max_depth,train_accuracy,test_accuracy`, one row per cell.
pub fn write_sweep_csv<T: Scalar>(path: impl AsRef<Path>, result: &TuningResult<T>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("n_estimators,max_depth,train_accuracy,test_accuracy\n");
    for c in &result.grid {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.n_estimators, c.max_depth, c.train_accuracy, c.test_accuracy
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{accuracy, confusion, stratified_split};
    use crate::geodata::{synth_generate, Task};

    fn split() -> (LabeledDataset<f64>, LabeledDataset<f64>) {
        let d = synth_generate::<f64>(Task::Prevention, 40, 8).unwrap();
        stratified_split(&d, 0.8, 8).unwrap()
    }

    #[test]
    fn grid_shape_and_argmax() {
        let (tr, te) = split();
        let r = tune_sweep(&tr, &te, 42).unwrap();
        assert_eq!(r.grid.len(), 225);
        assert!(r.grid.iter().all(|c| c.test_accuracy <= r.best.test_accuracy));
        let first = r.grid.iter().find(|c| c.test_accuracy == r.best.test_accuracy).unwrap();
        assert_eq!(
            (first.n_estimators, first.max_depth),
            (r.best.n_estimators, r.best.max_depth)
        );
    }

    #[test]
    fn cells_match_direct_training() {
        let (tr, te) = split();
        let r = tune_sweep_range(&tr, &te, 7, 9, 6).unwrap();
        assert_eq!(r.grid.len(), 54);
        for (n, d) in [(1, 1), (4, 3), (7, 5), (9, 6), (2, 6)] {
            let m = fit_forest(&tr, n, d, 7).unwrap();
            let acc = |data: &LabeledDataset<f64>| {
                accuracy::<f64>(&confusion(&m.predict_dataset(data).unwrap(), &data.labels()).unwrap()).unwrap()
            };
            let cell = r.cell(n, d).unwrap();
            assert_eq!(cell.train_accuracy, acc(&tr));
            assert_eq!(cell.test_accuracy, acc(&te));
        }
    }

    #[test]
    fn csv_has_header_and_225_rows() {
        let (tr, te) = split();
        let r = tune_sweep(&tr, &te, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sweep.csv");
        write_sweep_csv(&p, &r).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n_estimators,max_depth,train_accuracy,test_accuracy");
        assert_eq!(lines.len(), 226);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let (tr, _) = split();
        let empty = tr.subset(&[]);
        assert!(tune_sweep(&tr, &empty, 1).is_err());
    }
}
