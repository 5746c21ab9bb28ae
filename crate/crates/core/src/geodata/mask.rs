use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Feature, FeatureGrid, Task};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// NLCD land-cover class codes.
pub mod nlcd {
    use super::MaskReason;

    pub const OPEN_WATER: i64 = 11;
    pub const PERENNIAL_ICE_SNOW: i64 = 12;
    pub const DECIDUOUS_FOREST: i64 = 41;
    pub const EVERGREEN_FOREST: i64 = 42;
    pub const MIXED_FOREST: i64 = 43;
    pub const SHRUB_SCRUB: i64 = 52;
    pub const GRASSLAND: i64 = 71;

    pub const CLASS_CODES: [i64; 20] = [
        11, 12, 21, 22, 23, 24, 31, 41, 42, 43, 51, 52, 71, 72, 73, 74, 81, 82, 90, 95,
    ];

    /// Open water, ice/snow, the four developed intensities, barren,
    /// moss, woody wetlands and emergent herbaceous wetlands.
    pub const DEFAULT_EXCLUDED: [i64; 10] = [11, 12, 21, 22, 23, 24, 31, 74, 90, 95];

    /// Mask reason implied by excluding a class, when the class has one.
    pub fn reason_for(code: i64) -> Option<MaskReason> {
        match code {
            11 => Some(MaskReason::Water),
            12 => Some(MaskReason::IceSnow),
            21..=24 => Some(MaskReason::Developed),
            31 => Some(MaskReason::Barren),
            73 | 74 => Some(MaskReason::Moss),
            90 | 95 => Some(MaskReason::Wetland),
            _ => None,
        }
    }
}

pub const DEFAULT_RAINFALL_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskReason {
    Water,
    IceSnow,
    Developed,
    Barren,
    Moss,
    Wetland,
    Rainfall,
    MissingData,
}

impl fmt::Display for MaskReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MaskReason::Water => "water",
            MaskReason::IceSnow => "ice_snow",
            MaskReason::Developed => "developed",
            MaskReason::Barren => "barren",
            MaskReason::Moss => "moss",
            MaskReason::Wetland => "wetland",
            MaskReason::Rainfall => "rainfall",
            MaskReason::MissingData => "missing_data",
        };
        f.write_str(s)
    }
}

/// Which land-cover classes and how much rain rule a cell out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaskSpecRepr", into = "MaskSpecRepr")]
pub struct MaskSpec {
    excluded_landcover_codes: BTreeSet<i64>,
    /// kg/(m²·s)
    rainfall_threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct MaskSpecRepr {
    excluded_landcover_codes: BTreeSet<i64>,
    rainfall_threshold: f64,
}

impl TryFrom<MaskSpecRepr> for MaskSpec {
    type Error = Error;

    fn try_from(r: MaskSpecRepr) -> Result<Self> {
        MaskSpec::new(r.excluded_landcover_codes, r.rainfall_threshold)
    }
}

impl From<MaskSpec> for MaskSpecRepr {
    fn from(m: MaskSpec) -> Self {
        MaskSpecRepr {
            excluded_landcover_codes: m.excluded_landcover_codes,
            rainfall_threshold: m.rainfall_threshold,
        }
    }
}

impl Default for MaskSpec {
    fn default() -> Self {
        MaskSpec {
            excluded_landcover_codes: nlcd::DEFAULT_EXCLUDED.into_iter().collect(),
            rainfall_threshold: DEFAULT_RAINFALL_THRESHOLD,
        }
    }
}

impl MaskSpec {
    pub fn new(codes: impl IntoIterator<Item = i64>, rainfall_threshold: f64) -> Result<Self> {
        if !(rainfall_threshold >= 0.0) {
            return Err(Error::invalid(
                "rainfall_threshold",
                format!("must be >= 0, got {rainfall_threshold}"),
            ));
        }
        let codes: BTreeSet<i64> = codes.into_iter().collect();
        if let Some(&bad) = codes.iter().find(|&&c| nlcd::reason_for(c).is_none()) {
            return Err(Error::UnknownMaskCode(bad));
        }
        Ok(MaskSpec {
            excluded_landcover_codes: codes,
            rainfall_threshold,
        })
    }

    pub fn excluded_landcover_codes(&self) -> &BTreeSet<i64> {
        &self.excluded_landcover_codes
    }

    pub fn rainfall_threshold(&self) -> f64 {
        self.rainfall_threshold
    }

    fn reason_for_landcover(&self, code: i64) -> Option<MaskReason> {
        if self.excluded_landcover_codes.contains(&code) {
            nlcd::reason_for(code)
        } else {
            None
        }
    }
}

/// Masks excluded land-cover classes for both tasks and rainfall above the
/// threshold for prevention grids. Masked cells stay masked with their
/// original reason.
pub fn apply_mask<T: Scalar>(mut grid: FeatureGrid<T>, spec: &MaskSpec) -> FeatureGrid<T> {
    let schema = grid.schema;
    let lc_idx = schema.index_of(Feature::LandCover);
    let rain_idx = match schema.task {
        Task::Prevention => schema.index_of(Feature::PrecipitationRate),
        Task::Detection => None,
    };
    let threshold = T::of(spec.rainfall_threshold);

    grid.cells_mut().par_iter_mut().for_each(|cell| {
        if cell.masked() {
            return;
        }
        let land = lc_idx
            .and_then(|i| cell.features[i])
            .and_then(|v| v.round().to_i64())
            .and_then(|code| spec.reason_for_landcover(code));
        let rain = rain_idx
            .and_then(|i| cell.features[i])
            .filter(|&p| p > threshold)
            .map(|_| MaskReason::Rainfall);
        if let Some(reason) = land.or(rain) {
            cell.mask_reason = Some(reason);
        }
    });
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::{Coord, GridCell};
    use num_traits::ToPrimitive;

    fn prevention_cell(lat: f64, land: f64, precip: f64) -> GridCell<f64> {
        GridCell::unmasked(Coord::new(lat, 0.0), vec![land, 3.0, precip, 0.2, 300.0, 0.4])
    }

    fn grid(cells: Vec<GridCell<f64>>) -> FeatureGrid<f64> {
        FeatureGrid::new(Task::Prevention.schema(), 111.0, cells).unwrap()
    }

    #[test]
    fn open_water_is_masked_as_water() {
        let g = apply_mask(grid(vec![prevention_cell(0.0, 11.0, 0.0)]), &MaskSpec::default());
        assert_eq!(g.cells()[0].mask_reason, Some(MaskReason::Water));
    }

    #[test]
    fn rainfall_above_threshold_is_masked() {
        let g = apply_mask(grid(vec![prevention_cell(0.0, 42.0, 2e-5)]), &MaskSpec::default());
        assert_eq!(g.cells()[0].mask_reason, Some(MaskReason::Rainfall));
        let g = apply_mask(grid(vec![prevention_cell(0.0, 42.0, 1e-5)]), &MaskSpec::default());
        assert!(!g.cells()[0].masked(), "threshold itself is not rainfall");
    }

    #[test]
    fn forest_without_rain_stays_unmasked() {
        let g = apply_mask(grid(vec![prevention_cell(0.0, 41.0, 0.0)]), &MaskSpec::default());
        assert_eq!(g.cells()[0].mask_reason, None);
    }

    #[test]
    fn detection_ignores_rainfall_but_masks_land_cover() {
        let schema = Task::Detection.schema();
        let cells = vec![
            GridCell::unmasked(Coord::new(0.0, 0.0), vec![95.0, 0.01, 300.0, 0.3, 0.1, 40.0, 410.0]),
            GridCell::unmasked(Coord::new(1.0, 0.0), vec![42.0, 0.01, 300.0, 0.3, 0.1, 40.0, 410.0]),
        ];
        let g = apply_mask(FeatureGrid::new(schema, 111.0, cells).unwrap(), &MaskSpec::default());
        assert_eq!(g.cells()[0].mask_reason, Some(MaskReason::Wetland));
        assert!(!g.cells()[1].masked());
    }

    #[test]
    fn already_masked_cells_keep_their_reason() {
        let mut c = prevention_cell(0.0, 11.0, 1.0);
        c.mask_reason = Some(MaskReason::MissingData);
        let g = apply_mask(grid(vec![c]), &MaskSpec::default());
        assert_eq!(g.cells()[0].mask_reason, Some(MaskReason::MissingData));
    }

    #[test]
    fn default_codes_map_to_named_reasons() {
        let reasons: Vec<_> = nlcd::DEFAULT_EXCLUDED
            .iter()
            .map(|&c| nlcd::reason_for(c).unwrap().to_string())
            .collect();
        assert_eq!(
            reasons,
            [
                "water",
                "ice_snow",
                "developed",
                "developed",
                "developed",
                "developed",
                "barren",
                "moss",
                "wetland",
                "wetland"
            ]
        );
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(MaskSpec::new([41], 0.0), Err(Error::UnknownMaskCode(41))));
        assert!(MaskSpec::new([11], -1.0).is_err());
        assert!(MaskSpec::new([11], f64::NAN).is_err());
        let json = r#"{"excluded_landcover_codes":[11,90],"rainfall_threshold":0.001}"#;
        let spec: MaskSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.rainfall_threshold(), 0.001);
        assert_eq!(spec.excluded_landcover_codes().len(), 2);
        assert!(
            serde_json::from_str::<MaskSpec>(r#"{"excluded_landcover_codes":[42],"rainfall_threshold":0}"#).is_err()
        );
        assert_eq!(42.0_f64.to_i64(), Some(42));
    }
}
