use rand::Rng;
use rayon::prelude::*;

use super::default_features_per_split;
use super::tree::{check_size, Grower, TreeNode};
use crate::error::{Error, Result};
use crate::geodata::{LabeledDataset, TaskSchema};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Defaults to `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    /// Train each tree on a same-size resample drawn with replacement.
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn new(n_estimators: usize, max_depth: usize) -> Self {
        ForestParams {
            n_estimators,
            max_depth,
            features_per_split: None,
            bootstrap: true,
        }
    }

    fn validate(&self, n_features: usize) -> Result<usize> {
        if self.n_estimators == 0 {
            return Err(Error::invalid("n_estimators", "must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth", "must be at least 1"));
        }
        match self.features_per_split {
            Some(0) => Err(Error::invalid("features_per_split", "must be at least 1")),
            Some(k) => Ok(k.min(n_features)),
            None => Ok(default_features_per_split(n_features)),
        }
    }
}

/// Trained ensemble. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel<T> {
    trees: Vec<TreeNode<T>>,
    pub max_depth: usize,
    pub seed: u64,
    pub schema: TaskSchema,
    pub features_per_split: usize,
    pub bootstrap: bool,
}

impl<T: Scalar> RandomForestModel<T> {
    /// Assembles a model from already-built trees.
    pub fn from_trees(
        schema: TaskSchema,
        trees: Vec<TreeNode<T>>,
        max_depth: usize,
        features_per_split: usize,
        seed: u64,
        bootstrap: bool,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("n_estimators", "a forest needs at least one tree"));
        }
        for (i, t) in trees.iter().enumerate() {
            if t.depth() > max_depth {
                return Err(Error::invalid(
                    "max_depth",
                    format!("tree {i} has depth {} > {max_depth}", t.depth()),
                ));
            }
            if let Some(f) = t.max_feature().filter(|&f| f >= schema.len()) {
                return Err(Error::invalid(
                    "feature",
                    format!("tree {i} splits on feature {f} but the schema has {}", schema.len()),
                ));
            }
        }
        Ok(RandomForestModel {
            trees,
            max_depth,
            seed,
            schema,
            features_per_split,
            bootstrap,
        })
    }

    pub fn trees(&self) -> &[TreeNode<T>] {
        &self.trees
    }

    pub fn n_estimators(&self) -> usize {
        self.trees.len()
    }

    /// The first `n` trees as a forest of their own.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.trees.len() {
            return Err(Error::invalid(
                "n_estimators",
                format!("prefix {n} outside 1..={}", self.trees.len()),
            ));
        }
        let mut m = self.clone();
        m.trees.truncate(n);
        Ok(m)
    }

    fn check_dims(&self, x: &[T]) -> Result<()> {
        if x.len() != self.schema.len() {
            return Err(Error::DimensionMismatch {
                expected: self.schema.len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Number of trees voting positive.
    pub fn positive_votes(&self, x: &[T]) -> Result<usize> {
        self.check_dims(x)?;
        Ok(self.trees.iter().filter(|t| t.predict(x) == 1).count())
    }

    pub fn vote_fraction(&self, x: &[T]) -> Result<T> {
        let votes = self.positive_votes(x)?;
        Ok(T::of_count(votes) / T::of_count(self.trees.len()))
    }

    /// Majority vote; an exact tie is called positive.
    pub fn predict(&self, x: &[T]) -> Result<u8> {
        let votes = self.positive_votes(x)?;
        Ok(u8::from(2 * votes >= self.trees.len()))
    }

    pub fn predict_many<'a>(&self, xs: impl IntoIterator<Item = &'a [T]>) -> Result<Vec<u8>> {
        xs.into_iter().map(|x| self.predict(x)).collect()
    }

    pub fn predict_dataset(&self, dataset: &LabeledDataset<T>) -> Result<Vec<u8>> {
        self.predict_many(dataset.samples().iter().map(|s| s.features.as_slice()))
    }
}

/// Bagged forest with the default feature sampling.
pub fn fit_forest<T: Scalar>(
    dataset: &LabeledDataset<T>,
    n_estimators: usize,
    max_depth: usize,
    seed: u64,
) -> Result<RandomForestModel<T>> {
    fit_forest_with(dataset, &ForestParams::new(n_estimators, max_depth), seed)
}

/// Tree `i` draws its resample and per-node feature subsets from the
/// stream `seed::derive(seed, [i])`, so trees train in parallel and the
/// model is identical to a sequential build.
pub fn fit_forest_with<T: Scalar>(
    dataset: &LabeledDataset<T>,
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForestModel<T>> {
    check_size(dataset.len())?;
    let n_features = dataset.n_features();
    let features_per_split = params.validate(n_features)?;
    let grower = Grower {
        rows: dataset.samples(),
        n_features,
        max_depth: params.max_depth,
        features_per_split,
    };
    let n = dataset.len();

    let trees: Vec<TreeNode<T>> = (0..params.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(tree_seed(seed, i));
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(&idx, 0, &mut rng)
        })
        .collect();

    RandomForestModel::from_trees(
        dataset.schema,
        trees,
        params.max_depth,
        features_per_split,
        seed,
        params.bootstrap,
    )
}

/// Seed of tree `i`'s random stream.
pub fn tree_seed(seed: u64, i: usize) -> u64 {
    seed::derive(seed, &[i as u64])
}
