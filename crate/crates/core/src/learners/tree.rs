use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MAX_TRAINING_SAMPLES;
use crate::error::{Error, Result};
use crate::geodata::{LabeledDataset, Sample};
use crate::scalar::Scalar;
use crate::seed;

/// A binary CART node. Routing: go left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode<T> {
    Leaf {
        class: u8,
        /// `[negatives, positives]` of the training rows that reached the leaf.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: T,
        left: Box<TreeNode<T>>,
        right: Box<TreeNode<T>>,
    },
}

impl<T: Scalar> TreeNode<T> {
    /// Majority class, ties going to the positive class.
    pub fn leaf(counts: [usize; 2]) -> Self {
        let class = u8::from(counts[1] >= counts[0]);
        TreeNode::Leaf { class, counts }
    }

    pub fn predict(&self, x: &[T]) -> u8 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.n_nodes() + right.n_nodes(),
        }
    }

    pub(crate) fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature, left, right, ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }
}

/// A candidate split and its Gini impurity reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split<T> {
    pub feature: usize,
    pub threshold: T,
    pub reduction: T,
    pub(crate) score: Score,
}

/// Gini reduction of a split scaled to an integer fraction:
/// `reduction = 2 * num / (n^2 * den)` with `den = n_left * n_right`.
/// Exact, so equal-quality splits compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Score {
    num: i128,
    den: i128,
}

impl Score {
    fn of(parent: [usize; 2], left: [usize; 2]) -> Self {
        let n = (parent[0] + parent[1]) as i128;
        let (l0, l1) = (left[0] as i128, left[1] as i128);
        let (r0, r1) = (parent[0] as i128 - l0, parent[1] as i128 - l1);
        let (nl, nr) = (l0 + l1, r0 + r1);
        let num = parent[0] as i128 * parent[1] as i128 * nl * nr - l0 * l1 * n * nr - r0 * r1 * n * nl;
        Score { num, den: nl * nr }
    }

    fn reduction<T: Scalar>(&self, n: usize) -> T {
        let n = n as f64;
        T::of(2.0 * self.num as f64 / (n * n * self.den as f64))
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

fn class_counts<T>(rows: &[Sample<T>], idx: &[usize]) -> [usize; 2] {
    let pos = idx.iter().filter(|&&i| rows[i].label == 1).count();
    [idx.len() - pos, pos]
}

fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let mid = lo + (hi - lo) / (T::one() + T::one());
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Best split of `idx` over `features`, scanning midpoints between
/// consecutive distinct values. Ties keep the earliest candidate in
/// (feature order, ascending threshold). `None` when every candidate
/// feature is constant on `idx`.
pub fn best_split<T: Scalar>(rows: &[Sample<T>], idx: &[usize], features: &[usize]) -> Option<Split<T>> {
    let parent = class_counts(rows, idx);
    let mut best: Option<Split<T>> = None;
    let mut column: Vec<(T, u8)> = Vec::with_capacity(idx.len());
    for &f in features {
        column.clear();
        column.extend(idx.iter().map(|&i| (rows[i].features[f], rows[i].label)));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut left = [0usize; 2];
        for w in 0..column.len().saturating_sub(1) {
            left[column[w].1 as usize] += 1;
            let (lo, hi) = (column[w].0, column[w + 1].0);
            if !(lo < hi) {
                continue;
            }
            let score = Score::of(parent, left);
            if best.is_none_or(|b| score > b.score) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    reduction: score.reduction(idx.len()),
                    score,
                });
            }
        }
    }
    best
}

pub(crate) struct Grower<'a, T> {
    pub rows: &'a [Sample<T>],
    pub n_features: usize,
    pub max_depth: usize,
    pub features_per_split: usize,
}

impl<T: Scalar> Grower<'_, T> {
    pub fn grow<R: Rng>(&self, idx: &[usize], depth: usize, rng: &mut R) -> TreeNode<T> {
        let counts = class_counts(self.rows, idx);
        if depth >= self.max_depth || idx.len() < 2 || counts[0] == 0 || counts[1] == 0 {
            return TreeNode::leaf(counts);
        }
        let features: Vec<usize> = if self.features_per_split >= self.n_features {
            (0..self.n_features).collect()
        } else {
            let mut f = index::sample(rng, self.n_features, self.features_per_split).into_vec();
            f.sort_unstable();
            f
        };
        // Zero-gain splits are taken: an XOR-shaped node has no positive-gain
        // split but is still separable one level down.
        let Some(split) = best_split(self.rows, idx, &features) else {
            return TreeNode::leaf(counts);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i].features[split.feature] <= split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left, depth + 1, rng)),
            right: Box::new(self.grow(&right, depth + 1, rng)),
        }
    }
}

pub(crate) fn check_size(n: usize) -> Result<()> {
    match n {
        0 => Err(Error::EmptyDataset),
        n if n > MAX_TRAINING_SAMPLES => Err(Error::DatasetTooLarge(n)),
        _ => Ok(()),
    }
}

/// Grows one CART tree on the whole dataset. `features_per_split` distinct
/// features are drawn per node from a stream seeded by `seed`.
pub fn fit_tree<T: Scalar>(
    dataset: &LabeledDataset<T>,
    max_depth: usize,
    features_per_split: usize,
    seed: u64,
) -> Result<TreeNode<T>> {
    check_size(dataset.len())?;
    if features_per_split == 0 {
        return Err(Error::invalid("features_per_split", "must be at least 1"));
    }
    let grower = Grower {
        rows: dataset.samples(),
        n_features: dataset.n_features(),
        max_depth,
        features_per_split,
    };
    let idx: Vec<usize> = (0..dataset.len()).collect();
    Ok(grower.grow(&idx, 0, &mut seed::rng(seed)))
}
