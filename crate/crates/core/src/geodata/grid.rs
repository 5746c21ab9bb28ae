use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_bai, compute_ndvi, Coord, Feature, MaskReason, Parameter, ParameterLayer, TaskSchema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Edge length of a grid cell in meters.
pub const DEFAULT_CELL_SIZE_M: f64 = 111.0;

/// Meters per degree of latitude on the mean-radius sphere.
const M_PER_DEG_LAT: f64 = 111_194.93;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CellRepr<T>", into = "CellRepr<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GridCell<T> {
    pub coord: Coord,
    /// Schema-ordered features; `None` only where source data was missing.
    pub features: Vec<Option<T>>,
    pub mask_reason: Option<MaskReason>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
struct CellRepr<T> {
    lat: f64,
    lon: f64,
    features: Vec<Option<T>>,
    masked: bool,
    mask_reason: Option<MaskReason>,
}

impl<T: Scalar> TryFrom<CellRepr<T>> for GridCell<T> {
    type Error = String;

    fn try_from(r: CellRepr<T>) -> std::result::Result<Self, String> {
        if r.masked != r.mask_reason.is_some() {
            return Err(format!(
                "cell ({}, {}): masked={} disagrees with mask_reason",
                r.lat, r.lon, r.masked
            ));
        }
        Ok(GridCell {
            coord: Coord::new(r.lat, r.lon),
            features: r.features,
            mask_reason: r.mask_reason,
        })
    }
}

impl<T: Scalar> From<GridCell<T>> for CellRepr<T> {
    fn from(c: GridCell<T>) -> Self {
        CellRepr {
            lat: c.coord.lat,
            lon: c.coord.lon,
            masked: c.mask_reason.is_some(),
            features: c.features,
            mask_reason: c.mask_reason,
        }
    }
}

impl<T: Scalar> GridCell<T> {
    pub fn unmasked(coord: Coord, features: Vec<T>) -> Self {
        GridCell {
            coord,
            features: features.into_iter().map(Some).collect(),
            mask_reason: None,
        }
    }

    pub fn masked(&self) -> bool {
        self.mask_reason.is_some()
    }

    /// The complete feature vector, if every entry is present.
    pub fn feature_vector(&self) -> Option<Vec<T>> {
        self.features.iter().copied().collect()
    }

    pub fn feature(&self, index: usize) -> Option<T> {
        self.features.get(index).copied().flatten()
    }
}

/// Cells of one task schema on a common lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr<T>", into = "GridRepr<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FeatureGrid<T> {
    pub schema: TaskSchema,
    pub cell_size_m: f64,
    cells: Vec<GridCell<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
struct GridRepr<T> {
    cell_size_m: f64,
    schema: TaskSchema,
    cells: Vec<GridCell<T>>,
}

impl<T: Scalar> TryFrom<GridRepr<T>> for FeatureGrid<T> {
    type Error = Error;

    fn try_from(r: GridRepr<T>) -> Result<Self> {
        FeatureGrid::new(r.schema, r.cell_size_m, r.cells)
    }
}

impl<T: Scalar> From<FeatureGrid<T>> for GridRepr<T> {
    fn from(g: FeatureGrid<T>) -> Self {
        GridRepr {
            cell_size_m: g.cell_size_m,
            schema: g.schema,
            cells: g.cells,
        }
    }
}

impl<T: Scalar> FeatureGrid<T> {
    pub fn new(schema: TaskSchema, cell_size_m: f64, cells: Vec<GridCell<T>>) -> Result<Self> {
        if !(cell_size_m > 0.0) || !cell_size_m.is_finite() {
            return Err(Error::invalid(
                "cell_size_m",
                format!("must be positive, got {cell_size_m}"),
            ));
        }
        let mut seen = BTreeSet::new();
        for cell in &cells {
            if !seen.insert(cell.coord) {
                return Err(Error::invalid(
                    "grid",
                    format!("duplicate cell ({}, {})", cell.coord.lat, cell.coord.lon),
                ));
            }
            if cell.features.len() != schema.len() {
                return Err(Error::DimensionMismatch {
                    expected: schema.len(),
                    found: cell.features.len(),
                });
            }
            if !cell.masked() && cell.features.iter().any(Option::is_none) {
                return Err(Error::invalid(
                    "grid",
                    format!(
                        "unmasked cell ({}, {}) has missing features",
                        cell.coord.lat, cell.coord.lon
                    ),
                ));
            }
        }
        Ok(FeatureGrid {
            schema,
            cell_size_m,
            cells,
        })
    }

    pub fn cells(&self) -> &[GridCell<T>] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [GridCell<T>] {
        &mut self.cells
    }

    pub fn unmasked(&self) -> impl Iterator<Item = &GridCell<T>> {
        self.cells.iter().filter(|c| !c.masked())
    }

    pub fn masked_count(&self) -> usize {
        self.cells.iter().filter(|c| c.masked()).count()
    }

    pub fn get(&self, coord: &Coord) -> Option<&GridCell<T>> {
        self.cells.iter().find(|c| c.coord == *coord)
    }
}

/// Lat-sorted cells for nearest-neighbour lookups within a radius.
struct LayerIndex<'a, T> {
    sorted: Vec<&'a (Coord, T)>,
}

impl<'a, T: Scalar> LayerIndex<'a, T> {
    fn new(layer: &'a ParameterLayer<T>) -> Self {
        let mut sorted: Vec<_> = layer.cells().iter().collect();
        sorted.sort_by_key(|a| a.0);
        LayerIndex { sorted }
    }

    fn nearest(&self, at: &Coord, radius_m: f64) -> Option<T> {
        let dlat = radius_m / M_PER_DEG_LAT * 1.001;
        let start = self.sorted.partition_point(|(c, _)| c.lat < at.lat - dlat);
        self.sorted[start..]
            .iter()
            .take_while(|(c, _)| c.lat <= at.lat + dlat)
            .map(|(c, v)| (at.distance_m(c), *v))
            .filter(|(d, _)| *d <= radius_m)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v)
    }
}

fn assemble<T: Scalar>(schema: TaskSchema, raw: &BTreeMap<Parameter, T>) -> Vec<Option<T>> {
    schema
        .features()
        .iter()
        .map(|f| {
            let get = |p: Parameter| raw.get(&p).copied();
            match f {
                Feature::Ndvi => compute_ndvi(get(Parameter::Nir)?, get(Parameter::Red)?).ok(),
                Feature::Bai => compute_bai(get(Parameter::Nir)?, get(Parameter::Swir)?).ok(),
                other => get(other.sources()[0]),
            }
        })
        .collect()
}

/// Puts every layer the schema needs onto the coordinates of the first
/// required layer. Each other layer contributes its nearest value within
/// half a cell; cells lacking any input (or with a zero NDVI/BAI
/// denominator) are masked as missing data.
pub fn align_layers<T: Scalar>(
    layers: &[ParameterLayer<T>],
    schema: TaskSchema,
    cell_size_m: f64,
) -> Result<FeatureGrid<T>> {
    if !(cell_size_m > 0.0) || !cell_size_m.is_finite() {
        return Err(Error::invalid(
            "cell_size_m",
            format!("must be positive, got {cell_size_m}"),
        ));
    }
    let required = schema.required_parameters();
    let mut chosen: Vec<&ParameterLayer<T>> = Vec::with_capacity(required.len());
    for &p in &required {
        match layers.iter().find(|l| l.parameter == p) {
            Some(l) => chosen.push(l),
            None => return Err(Error::MissingLayer(p)),
        }
    }
    let anchor = layers
        .iter()
        .find(|l| required.contains(&l.parameter))
        .expect("at least one required layer is present");

    let indices: Vec<(Parameter, LayerIndex<T>)> = chosen
        .iter()
        .filter(|l| l.parameter != anchor.parameter)
        .map(|l| (l.parameter, LayerIndex::new(l)))
        .collect();
    let radius = cell_size_m / 2.0;

    let mut cells: Vec<GridCell<T>> = anchor
        .cells()
        .par_iter()
        .map(|&(coord, value)| {
            let mut raw = BTreeMap::new();
            raw.insert(anchor.parameter, value);
            for (p, idx) in &indices {
                if let Some(v) = idx.nearest(&coord, radius) {
                    raw.insert(*p, v);
                }
            }
            let features = assemble(schema, &raw);
            let mask_reason = features.iter().any(Option::is_none).then_some(MaskReason::MissingData);
            GridCell {
                coord,
                features,
                mask_reason,
            }
        })
        .collect();
    cells.sort_by_key(|a| a.coord);
    FeatureGrid::new(schema, cell_size_m, cells)
}

/// Writes a grid snapshot as JSON.
pub fn save_grid<T: Scalar>(path: impl AsRef<Path>, grid: &FeatureGrid<T>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(grid)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_grid<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureGrid<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::Task;
    use proptest::prelude::*;

    fn layer(p: Parameter, coords: &[(f64, f64)], value: f64) -> ParameterLayer<f64> {
        ParameterLayer::new(p, coords.iter().map(|&(a, b)| (Coord::new(a, b), value)).collect()).unwrap()
    }

    const COORDS: [(f64, f64); 3] = [(34.0, -118.0), (34.001, -118.0), (34.002, -118.0)];

    fn prevention_layers(coords: &[(f64, f64)]) -> Vec<ParameterLayer<f64>> {
        vec![
            layer(Parameter::LandCover, coords, 42.0),
            layer(Parameter::WindSpeed, coords, 6.0),
            layer(Parameter::PrecipitationRate, coords, 0.0),
            layer(Parameter::SoilMoisture, coords, 0.15),
            layer(Parameter::Temperature, coords, 305.0),
            layer(Parameter::Nir, coords, 0.6),
            layer(Parameter::Red, coords, 0.2),
        ]
    }

    #[test]
    fn identical_coordinates_give_complete_cells() {
        let grid = align_layers(&prevention_layers(&COORDS), Task::Prevention.schema(), 111.0).unwrap();
        assert_eq!(grid.cells().len(), 3);
        assert_eq!(grid.masked_count(), 0);
        let v = grid.cells()[0].feature_vector().unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[5] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_coordinate_masks_that_cell() {
        let mut layers = prevention_layers(&COORDS);
        layers[4] = layer(Parameter::Temperature, &COORDS[..2], 305.0);
        let grid = align_layers(&layers, Task::Prevention.schema(), 111.0).unwrap();
        let masked: Vec<_> = grid.cells().iter().filter(|c| c.masked()).collect();
        assert_eq!(masked.len(), 1);
        assert_eq!(masked[0].coord, Coord::new(34.002, -118.0));
        assert_eq!(masked[0].mask_reason, Some(MaskReason::MissingData));
        assert_eq!(masked[0].features[4], None);
    }

    #[test]
    fn nearest_value_within_half_cell_is_used() {
        let mut layers = prevention_layers(&COORDS);
        // 0.0003 deg lat ~ 33 m, inside the 55.5 m tolerance
        let shifted: Vec<_> = COORDS.iter().map(|&(a, b)| (a + 0.0003, b)).collect();
        layers[1] = layer(Parameter::WindSpeed, &shifted, 9.0);
        let grid = align_layers(&layers, Task::Prevention.schema(), 111.0).unwrap();
        assert_eq!(grid.masked_count(), 0);
        assert!(grid.cells().iter().all(|c| c.feature(1) == Some(9.0)));

        // 0.0006 deg ~ 67 m, outside
        let far: Vec<_> = COORDS.iter().map(|&(a, b)| (a + 0.0006, b)).collect();
        layers[1] = layer(Parameter::WindSpeed, &far, 9.0);
        let grid = align_layers(&layers, Task::Prevention.schema(), 111.0).unwrap();
        // the shifted points sit 0.0004 deg (~44 m) below the next cell, so only the first cell loses wind
        assert_eq!(grid.masked_count(), 1);
        assert!(grid.cells()[0].masked());
    }

    #[test]
    fn missing_ozone_layer_is_an_error() {
        let layers = vec![
            layer(Parameter::LandCover, &COORDS, 42.0),
            layer(Parameter::Humidity, &COORDS, 0.01),
            layer(Parameter::Temperature, &COORDS, 300.0),
            layer(Parameter::Nir, &COORDS, 0.4),
            layer(Parameter::Red, &COORDS, 0.2),
            layer(Parameter::Swir, &COORDS, 0.3),
            layer(Parameter::Co2, &COORDS, 415.0),
        ];
        match align_layers(&layers, Task::Detection.schema(), 111.0) {
            Err(Error::MissingLayer(p)) => assert_eq!(p, Parameter::Ozone),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_reflectance_masks_instead_of_failing() {
        let mut layers = prevention_layers(&COORDS);
        layers[5] = layer(Parameter::Nir, &COORDS, 0.0);
        layers[6] = layer(Parameter::Red, &COORDS, 0.0);
        let grid = align_layers(&layers, Task::Prevention.schema(), 111.0).unwrap();
        assert_eq!(grid.masked_count(), 3);
        assert!(grid
            .cells()
            .iter()
            .all(|c| c.mask_reason == Some(MaskReason::MissingData)));
    }

    #[test]
    fn snapshot_rejects_inconsistent_mask_flag() {
        let grid = align_layers(&prevention_layers(&COORDS), Task::Prevention.schema(), 111.0).unwrap();
        let json = serde_json::to_string(&grid).unwrap();
        let bad = json.replacen("\"masked\":false", "\"masked\":true", 1);
        assert!(serde_json::from_str::<FeatureGrid<f64>>(&bad).is_err());
    }

    fn arb_grid() -> impl Strategy<Value = FeatureGrid<f64>> {
        prop::collection::btree_map(
            (-900i32..900, -1800i32..1800),
            (
                prop::collection::vec(prop::option::weighted(0.9, -1e3f64..1e3), 6),
                any::<bool>(),
            ),
            0..20,
        )
        .prop_map(|cells| {
            let cells = cells
                .into_iter()
                .map(|((la, lo), (features, water))| {
                    let incomplete = features.iter().any(Option::is_none);
                    let mask_reason = if incomplete {
                        Some(MaskReason::MissingData)
                    } else if water {
                        Some(MaskReason::Water)
                    } else {
                        None
                    };
                    GridCell {
                        coord: Coord::new(la as f64 / 10.0, lo as f64 / 10.0),
                        features,
                        mask_reason,
                    }
                })
                .collect();
            FeatureGrid::new(Task::Prevention.schema(), 111.0, cells).unwrap()
        })
    }

    proptest! {
        #[test]
        fn snapshot_round_trips(grid in arb_grid()) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("grid.json");
            save_grid(&p, &grid).unwrap();
            let back: FeatureGrid<f64> = load_grid(&p).unwrap();
            prop_assert_eq!(back, grid);
        }

        #[test]
        fn unmasked_features_trace_to_layer_values(
            wind in prop::collection::vec(0.0f64..30.0, 3),
            temp in prop::collection::vec(250.0f64..330.0, 3),
        ) {
            let mut layers = prevention_layers(&COORDS);
            layers[1] = ParameterLayer::new(
                Parameter::WindSpeed,
                COORDS.iter().zip(&wind).map(|(&(a, b), &v)| (Coord::new(a, b), v)).collect(),
            ).unwrap();
            layers[4] = ParameterLayer::new(
                Parameter::Temperature,
                COORDS.iter().zip(&temp).map(|(&(a, b), &v)| (Coord::new(a, b), v)).collect(),
            ).unwrap();
            let grid = align_layers(&layers, Task::Prevention.schema(), 111.0).unwrap();
            for (cell, (w, t)) in grid.cells().iter().zip(wind.iter().zip(&temp)) {
                prop_assert_eq!(cell.feature(1), Some(*w));
                prop_assert_eq!(cell.feature(4), Some(*t));
            }
        }
    }
}
