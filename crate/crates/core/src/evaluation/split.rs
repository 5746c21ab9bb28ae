use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::geodata::LabeledDataset;
use crate::scalar::Scalar;
use crate::seed;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Per-class seeded shuffle, then `floor(count * fraction + 0.5)` of each
/// class goes to training. Both halves keep the dataset's row order.
pub fn stratified_split<T: Scalar>(
    dataset: &LabeledDataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::invalid(
            "train_fraction",
            format!("must lie in [0, 1], got {train_fraction}"),
        ));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.samples()[i].label == class)
            .collect();
        idx.shuffle(&mut seed::stream(seed, &[u64::from(class)]));
        let k = (idx.len() as f64 * train_fraction + 0.5).floor() as usize;
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
