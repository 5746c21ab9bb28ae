//! Synthetic raw parameter layers for end-to-end runs.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::synth::SynthConfig;
use super::{mask::nlcd, Coord, Feature, Parameter, ParameterLayer, Task};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Meters per degree of latitude on the mean-radius sphere.
const M_PER_DEG_LAT: f64 = 6_371_008.8 * std::f64::consts::PI / 180.0;

/// A rectangular block of square cells. Cells in the hot block draw from the
/// positive class, everything else from the negative class, and the water
/// rows are open water regardless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    /// South-west cell center.
    pub origin: Coord,
    pub cell_size_m: f64,
    pub hot_rows: Range<usize>,
    pub hot_cols: Range<usize>,
    pub water_rows: Range<usize>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            rows: 20,
            cols: 20,
            origin: Coord::new(34.0, -118.5),
            cell_size_m: super::DEFAULT_CELL_SIZE_M,
            hot_rows: 5..15,
            hot_cols: 5..15,
            water_rows: 0..1,
        }
    }
}

impl SceneSpec {
    pub fn coord(&self, row: usize, col: usize) -> Coord {
        let dlat = self.cell_size_m / M_PER_DEG_LAT;
        let dlon = dlat / self.origin.lat.to_radians().cos();
        Coord::new(self.origin.lat + row as f64 * dlat, self.origin.lon + col as f64 * dlon)
    }

    pub fn is_hot(&self, row: usize, col: usize) -> bool {
        self.hot_rows.contains(&row) && self.hot_cols.contains(&col) && !self.water_rows.contains(&row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene<T> {
    pub task: Task,
    /// One layer per required parameter, in schema order.
    pub layers: Vec<ParameterLayer<T>>,
    /// Planted class of every cell, row-major.
    pub truth: Vec<(Coord, u8)>,
}

/// NIR, red and SWIR reflectances in `(0, 0.9]` reproducing the given indices.
fn reflectances(ndvi: f64, bai: f64) -> (f64, f64, f64) {
    let ratio = |i: f64| {
        let i = i.clamp(-0.95, 0.95);
        (1.0 - i) / (1.0 + i)
    };
    let (r, s) = (ratio(ndvi), ratio(bai));
    let nir = 0.9 / r.max(s).max(1.0);
    (nir, nir * r, nir * s)
}

pub fn synth_scene<T: Scalar>(config: &SynthConfig<T>, spec: &SceneSpec, seed: u64) -> Result<SynthScene<T>> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(Error::invalid("scene", "needs at least one row and column"));
    }
    if !(spec.cell_size_m > 0.0) || !spec.cell_size_m.is_finite() {
        return Err(Error::invalid(
            "cell_size_m",
            format!("must be positive, got {}", spec.cell_size_m),
        ));
    }
    let schema = config.schema();
    if config.features.len() != schema.len() {
        return Err(Error::DimensionMismatch {
            expected: schema.len(),
            found: config.features.len(),
        });
    }
    let spread = config.overlap.as_f64();
    let mut rng = seed::rng(seed);
    let mut values: BTreeMap<Parameter, Vec<(Coord, T)>> = BTreeMap::new();
    let mut truth = Vec::with_capacity(spec.rows * spec.cols);

    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let coord = spec.coord(row, col);
            if !coord.in_range() {
                return Err(Error::invalid(
                    "scene",
                    format!("cell {row},{col} falls outside valid coordinates"),
                ));
            }
            let hot = spec.is_hot(row, col);
            let (mut ndvi, mut bai) = (0.0, 0.0);
            for (feature, dist) in schema.features().iter().zip(&config.features) {
                let mut v = dist.sample(hot, spread, &mut rng);
                match feature {
                    Feature::Ndvi => ndvi = v,
                    Feature::Bai => bai = v,
                    f => {
                        if *f == Feature::LandCover && spec.water_rows.contains(&row) {
                            v = nlcd::OPEN_WATER as f64;
                        }
                        values.entry(f.sources()[0]).or_default().push((coord, T::of(v)));
                    }
                }
            }
            let (nir, red, swir) = reflectances(ndvi, bai);
            let uses = |f| schema.index_of(f).is_some();
            if uses(Feature::Ndvi) || uses(Feature::Bai) {
                values.entry(Parameter::Nir).or_default().push((coord, T::of(nir)));
            }
            if uses(Feature::Ndvi) {
                values.entry(Parameter::Red).or_default().push((coord, T::of(red)));
            }
            if uses(Feature::Bai) {
                values.entry(Parameter::Swir).or_default().push((coord, T::of(swir)));
            }
            truth.push((coord, hot as u8));
        }
    }

    let layers = schema
        .required_parameters()
        .into_iter()
        .map(|p| ParameterLayer::new(p, values.remove(&p).unwrap_or_default()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthScene {
        task: config.task,
        layers,
        truth,
    })
}
