//! Layer ingestion, grid assembly, masking and labeled datasets.

mod dataset;
mod grid;
mod indices;
mod layer;
mod mask;
mod scene;
mod synth;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub use dataset::{load_labeled_dataset, write_labeled_dataset, LabeledDataset, Sample};
pub use grid::{align_layers, load_grid, save_grid, FeatureGrid, GridCell, DEFAULT_CELL_SIZE_M};
pub use indices::{compute_bai, compute_ndvi};
pub use layer::{load_layer, write_layer, ParameterLayer};
pub use mask::{apply_mask, nlcd, MaskReason, MaskSpec, DEFAULT_RAINFALL_THRESHOLD};
pub use scene::{synth_scene, SceneSpec, SynthScene};
pub use synth::{synth_generate, synth_generate_with, FeatureDistribution, SynthConfig};

/// A raw input layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    LandCover,
    WindSpeed,
    PrecipitationRate,
    SoilMoisture,
    Temperature,
    Nir,
    Red,
    Swir,
    Humidity,
    Ozone,
    Co2,
}

impl Parameter {
    pub const ALL: [Parameter; 11] = [
        Parameter::LandCover,
        Parameter::WindSpeed,
        Parameter::PrecipitationRate,
        Parameter::SoilMoisture,
        Parameter::Temperature,
        Parameter::Nir,
        Parameter::Red,
        Parameter::Swir,
        Parameter::Humidity,
        Parameter::Ozone,
        Parameter::Co2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::LandCover => "land_cover",
            Parameter::WindSpeed => "wind_speed",
            Parameter::PrecipitationRate => "precipitation_rate",
            Parameter::SoilMoisture => "soil_moisture",
            Parameter::Temperature => "temperature",
            Parameter::Nir => "nir",
            Parameter::Red => "red",
            Parameter::Swir => "swir",
            Parameter::Humidity => "humidity",
            Parameter::Ozone => "ozone",
            Parameter::Co2 => "co2",
        }
    }

    /// Closed range of admissible values, if the parameter has one.
    pub fn valid_range(self) -> Option<(f64, f64)> {
        match self {
            Parameter::SoilMoisture | Parameter::Nir | Parameter::Red | Parameter::Swir => Some((0.0, 1.0)),
            _ => None,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown parameter `{s}`"))
    }
}

/// A model input column. Raw parameters map one to one, except the two
/// spectral indices which are derived from reflectance bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    LandCover,
    WindSpeed,
    PrecipitationRate,
    SoilMoisture,
    Temperature,
    Ndvi,
    Bai,
    Humidity,
    Ozone,
    Co2,
}

impl Feature {
    pub fn name(self) -> &'static str {
        match self {
            Feature::LandCover => "land_cover",
            Feature::WindSpeed => "wind_speed",
            Feature::PrecipitationRate => "precipitation_rate",
            Feature::SoilMoisture => "soil_moisture",
            Feature::Temperature => "temperature",
            Feature::Ndvi => "ndvi",
            Feature::Bai => "bai",
            Feature::Humidity => "humidity",
            Feature::Ozone => "ozone",
            Feature::Co2 => "co2",
        }
    }

    /// Raw layers this feature is computed from.
    pub fn sources(self) -> &'static [Parameter] {
        match self {
            Feature::LandCover => &[Parameter::LandCover],
            Feature::WindSpeed => &[Parameter::WindSpeed],
            Feature::PrecipitationRate => &[Parameter::PrecipitationRate],
            Feature::SoilMoisture => &[Parameter::SoilMoisture],
            Feature::Temperature => &[Parameter::Temperature],
            Feature::Ndvi => &[Parameter::Nir, Parameter::Red],
            Feature::Bai => &[Parameter::Nir, Parameter::Swir],
            Feature::Humidity => &[Parameter::Humidity],
            Feature::Ozone => &[Parameter::Ozone],
            Feature::Co2 => &[Parameter::Co2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Hotspot prediction: where could a fire start.
    Prevention,
    /// Active wildfire detection.
    Detection,
}

const PREVENTION_FEATURES: [Feature; 6] = [
    Feature::LandCover,
    Feature::WindSpeed,
    Feature::PrecipitationRate,
    Feature::SoilMoisture,
    Feature::Temperature,
    Feature::Ndvi,
];

const DETECTION_FEATURES: [Feature; 7] = [
    Feature::LandCover,
    Feature::Humidity,
    Feature::Temperature,
    Feature::Ndvi,
    Feature::Bai,
    Feature::Ozone,
    Feature::Co2,
];

impl Task {
    pub fn schema(self) -> TaskSchema {
        TaskSchema { task: self }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Prevention => "prevention",
            Task::Detection => "detection",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prevention" => Ok(Task::Prevention),
            "detection" => Ok(Task::Detection),
            other => Err(format!("unknown task `{other}` (expected prevention or detection)")),
        }
    }
}

/// Fixed feature order for a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaskSchema {
    pub task: Task,
}

impl TaskSchema {
    pub fn features(&self) -> &'static [Feature] {
        match self.task {
            Task::Prevention => &PREVENTION_FEATURES,
            Task::Detection => &DETECTION_FEATURES,
        }
    }

    pub fn len(&self) -> usize {
        self.features().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, feature: Feature) -> Option<usize> {
        self.features().iter().position(|&f| f == feature)
    }

    pub fn feature_names(&self) -> Vec<&'static str> {
        self.features().iter().map(|f| f.name()).collect()
    }

    /// Raw layers needed to assemble this schema, deduplicated in first-use order.
    pub fn required_parameters(&self) -> Vec<Parameter> {
        let mut out = Vec::new();
        for p in self.features().iter().flat_map(|f| f.sources()) {
            if !out.contains(p) {
                out.push(*p);
            }
        }
        out
    }

    /// Short digest of the task and its ordered feature names.
    pub fn hash(&self) -> String {
        let text = format!("{}:{}", self.task, self.feature_names().join(","));
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    task: Task,
    feature_order: Vec<String>,
}

impl Serialize for TaskSchema {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SchemaRepr {
            task: self.task,
            feature_order: self.feature_names().iter().map(|s| s.to_string()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TaskSchema {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = SchemaRepr::deserialize(deserializer)?;
        let schema = repr.task.schema();
        if repr.feature_order != schema.feature_names() {
            return Err(serde::de::Error::custom(format!(
                "feature order {:?} does not match the {} schema",
                repr.feature_order, repr.task
            )));
        }
        Ok(schema)
    }
}

/// Geographic position in degrees. Ordered by latitude then longitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Coord {
    pub lat: f64,
    pub lon: f64,
}

impl Coord {
    pub fn new(lat: f64, lon: f64) -> Self {
        Coord { lat, lon }
    }

    pub fn in_range(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }

    /// Great-circle distance in meters.
    pub fn distance_m(&self, other: &Coord) -> f64 {
        const EARTH_RADIUS_M: f64 = 6_371_008.8;
        let (p1, p2) = (self.lat.to_radians(), other.lat.to_radians());
        let dp = p2 - p1;
        let dl = (other.lon - self.lon).to_radians();
        let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
    }
}

impl PartialEq for Coord {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Coord {}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lat.total_cmp(&other.lat).then(self.lon.total_cmp(&other.lon))
    }
}
