//! Synthetic labeled data standing in for hand-labeled coordinates.
//!
//! Each feature has a class-conditional distribution. Positives (hotspots,
//! wildfires) are hot, windy, dry and moderately vegetated; negatives are
//! cooler and wetter. Several negative features are bimodal (bare ground or
//! lush canopy for NDVI, clean or polluted air for detection) so no single
//! hyperplane separates the classes.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{mask::nlcd, Coord, Feature, LabeledDataset, Sample, Task, TaskSchema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// Equal-weight Gaussian mixture per class, clamped to `[min, max]`.
    Normal {
        negative_modes: Vec<f64>,
        positive_modes: Vec<f64>,
        std: f64,
        min: f64,
        max: f64,
    },
    /// Weighted land-cover codes per class.
    Categorical {
        negative: Vec<(i64, f64)>,
        positive: Vec<(i64, f64)>,
    },
}

impl FeatureDistribution {
    fn normal(neg: &[f64], pos: &[f64], std: f64, min: f64, max: f64) -> Self {
        FeatureDistribution::Normal {
            negative_modes: neg.to_vec(),
            positive_modes: pos.to_vec(),
            std,
            min,
            max,
        }
    }

    /// Class-conditional mean before clamping, `[negative, positive]`.
    pub fn class_means(&self) -> [f64; 2] {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let wmean = |v: &[(i64, f64)]| {
            let w: f64 = v.iter().map(|p| p.1).sum();
            v.iter().map(|&(c, p)| c as f64 * p).sum::<f64>() / w
        };
        match self {
            FeatureDistribution::Normal {
                negative_modes,
                positive_modes,
                ..
            } => [mean(negative_modes), mean(positive_modes)],
            FeatureDistribution::Categorical { negative, positive } => [wmean(negative), wmean(positive)],
        }
    }

    pub(crate) fn sample<R: Rng>(&self, is_positive: bool, spread: f64, rng: &mut R) -> f64 {
        match self {
            FeatureDistribution::Normal {
                negative_modes,
                positive_modes,
                std,
                min,
                max,
            } => {
                let modes = if is_positive { positive_modes } else { negative_modes };
                let mode = modes[rng.random_range(0..modes.len())];
                let normal = Normal::new(mode, std * spread).expect("finite std");
                normal.sample(rng).clamp(*min, *max)
            }
            FeatureDistribution::Categorical { negative, positive } => {
                let table = if is_positive { positive } else { negative };
                let idx = WeightedIndex::new(table.iter().map(|p| p.1)).expect("positive weights");
                table[idx.sample(rng)].0 as f64
            }
        }
    }
}

/// Generator settings: one distribution per schema feature plus a spread
/// multiplier on every standard deviation (larger = more class overlap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig<T> {
    pub task: Task,
    pub overlap: T,
    pub features: Vec<FeatureDistribution>,
    /// Sampling box, `(min_lat, max_lat, min_lon, max_lon)`.
    pub bbox: (f64, f64, f64, f64),
}

fn land_cover() -> FeatureDistribution {
    use nlcd::*;
    FeatureDistribution::Categorical {
        negative: vec![
            (DECIDUOUS_FOREST, 0.3),
            (MIXED_FOREST, 0.2),
            (81, 0.2),
            (82, 0.2),
            (EVERGREEN_FOREST, 0.1),
        ],
        positive: vec![
            (EVERGREEN_FOREST, 0.4),
            (SHRUB_SCRUB, 0.3),
            (GRASSLAND, 0.2),
            (MIXED_FOREST, 0.1),
        ],
    }
}

impl<T: Scalar> SynthConfig<T> {
    pub fn for_task(task: Task) -> Self {
        use FeatureDistribution as D;
        let features = match task {
            // land_cover, wind_speed, precipitation_rate, soil_moisture, temperature, ndvi
            Task::Prevention => vec![
                land_cover(),
                D::normal(&[4.5], &[7.5], 2.5, 0.0, 40.0),
                D::normal(&[2.5e-6], &[2e-7], 1.5e-6, 0.0, 1e-5),
                D::normal(&[0.26], &[0.14], 0.08, 0.0, 1.0),
                D::normal(&[297.0], &[304.0], 4.0, 230.0, 330.0),
                D::normal(&[0.05, 0.72], &[0.35], 0.07, -1.0, 1.0),
            ],
            // land_cover, humidity, temperature, ndvi, bai, ozone, co2
            Task::Detection => vec![
                land_cover(),
                D::normal(&[0.003, 0.012], &[0.0075], 0.0015, 0.0, 0.03),
                D::normal(&[298.0], &[310.0], 5.0, 230.0, 340.0),
                D::normal(&[-0.05, 0.65], &[0.2], 0.08, -1.0, 1.0),
                D::normal(&[-0.3, 0.5], &[0.1], 0.1, -1.0, 1.0),
                D::normal(&[30.0, 72.0], &[56.0], 8.0, 0.0, 200.0),
                D::normal(&[408.0, 434.0], &[424.0], 5.0, 380.0, 500.0),
            ],
        };
        SynthConfig {
            task,
            overlap: T::one(),
            features,
            bbox: (32.5, 42.0, -124.0, -114.5),
        }
    }

    pub fn schema(&self) -> TaskSchema {
        self.task.schema()
    }

    pub fn distribution(&self, feature: Feature) -> Option<&FeatureDistribution> {
        self.schema().index_of(feature).map(|i| &self.features[i])
    }

    /// Positive-minus-negative mean temperature.
    pub fn temperature_gap(&self) -> f64 {
        let [neg, pos] = self
            .distribution(Feature::Temperature)
            .expect("both schemas carry temperature")
            .class_means();
        pos - neg
    }
}

/// `n_per_class` positives and negatives from the default generator.
pub fn synth_generate<T: Scalar>(task: Task, n_per_class: usize, seed: u64) -> Result<LabeledDataset<T>> {
    synth_generate_with(&SynthConfig::for_task(task), n_per_class, seed)
}

/// Samples alternate positive, negative. Deterministic in `seed`.
pub fn synth_generate_with<T: Scalar>(
    config: &SynthConfig<T>,
    n_per_class: usize,
    seed: u64,
) -> Result<LabeledDataset<T>> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class", "must be at least 1"));
    }
    let schema = config.schema();
    if config.features.len() != schema.len() {
        return Err(Error::DimensionMismatch {
            expected: schema.len(),
            found: config.features.len(),
        });
    }
    let spread = config.overlap.as_f64();
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::invalid("overlap", format!("must be positive, got {spread}")));
    }

    let mut rng = seed::rng(seed);
    let (la0, la1, lo0, lo1) = config.bbox;
    let lat = Uniform::new_inclusive(la0, la1).map_err(|e| Error::invalid("bbox", e.to_string()))?;
    let lon = Uniform::new_inclusive(lo0, lo1).map_err(|e| Error::invalid("bbox", e.to_string()))?;

    let mut samples = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        for label in [1u8, 0] {
            let coord = Coord::new(lat.sample(&mut rng), lon.sample(&mut rng));
            let features = config
                .features
                .iter()
                .map(|d| T::of(d.sample(label == 1, spread, &mut rng)))
                .collect();
            samples.push(Sample { coord, features, label });
        }
    }
    LabeledDataset::new(schema, samples)
}
