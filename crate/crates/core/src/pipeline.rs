//! Grid classification, no-spray filtering and the end-to-end run for one task.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geodata::{
    align_layers, apply_mask, load_layer, Coord, Feature, FeatureGrid, MaskSpec, Parameter, ParameterLayer, Task,
    DEFAULT_CELL_SIZE_M,
};
use crate::learners::{load_model, model_id, RandomForestModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Target<T> {
    pub lat: f64,
    pub lon: f64,
    pub vote_fraction: T,
}

impl<T> Target<T> {
    pub fn coord(&self) -> Coord {
        Coord::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TargetCounts {
    pub total_cells: usize,
    pub masked_cells: usize,
    pub positive_cells: usize,
    pub suppressed_no_spray: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub timestamp: Option<String>,
    pub model_id: String,
    pub config_hash: Option<String>,
    pub cell_size_m: f64,
}

/// Cells flagged positive, in latitude-then-longitude order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TargetReport<T> {
    pub task: Task,
    pub metadata: RunMetadata,
    pub counts: TargetCounts,
    pub targets: Vec<Target<T>>,
}

/// Places where retardant may not be dropped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoSpraySpec {
    #[serde(default)]
    pub cells: BTreeSet<Coord>,
    #[serde(default)]
    pub landcover_codes: BTreeSet<i64>,
}

impl NoSpraySpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.landcover_codes.is_empty()
    }
}

/// Runs every unmasked cell through the forest. Masked cells are counted
/// but never classified.
pub fn classify_grid<T: Scalar>(grid: &FeatureGrid<T>, model: &RandomForestModel<T>) -> Result<TargetReport<T>> {
    if grid.schema != model.schema {
        return Err(Error::SchemaMismatch {
            data: grid.schema.task,
            model: model.schema.task,
        });
    }
    let mut targets = grid
        .cells()
        .par_iter()
        .filter(|c| !c.masked())
        .map(|cell| {
            let x = cell.feature_vector().expect("unmasked cells are complete");
            let fraction = model.vote_fraction(&x)?;
            let positive = model.predict(&x)? == 1;
            Ok(positive.then_some(Target {
                lat: cell.coord.lat,
                lon: cell.coord.lon,
                vote_fraction: fraction,
            }))
        })
        .filter_map(|r: Result<Option<Target<T>>>| r.transpose())
        .collect::<Result<Vec<_>>>()?;
    targets.sort_by_key(|a| a.coord());

    Ok(TargetReport {
        task: grid.schema.task,
        metadata: RunMetadata {
            timestamp: None,
            model_id: model_id(model)?,
            config_hash: None,
            cell_size_m: grid.cell_size_m,
        },
        counts: TargetCounts {
            total_cells: grid.cells().len(),
            masked_cells: grid.masked_count(),
            positive_cells: targets.len(),
            suppressed_no_spray: 0,
        },
        targets,
    })
}

/// Drops prevention targets inside no-spray cells or land-cover classes.
/// Detection reports pass through unchanged: an active fire is always
/// attacked at its perimeter.
pub fn filter_no_spray<T: Scalar>(
    report: TargetReport<T>,
    spec: &NoSpraySpec,
    grid: &FeatureGrid<T>,
) -> TargetReport<T> {
    if report.task != Task::Prevention || spec.is_empty() {
        return report;
    }
    let lc = grid.schema.index_of(Feature::LandCover);
    let cover: BTreeMap<Coord, i64> = grid
        .cells()
        .iter()
        .filter_map(|c| Some((c.coord, c.feature(lc?)?.round().to_i64()?)))
        .collect();
    let before = report.targets.len();
    let targets: Vec<Target<T>> = report
        .targets
        .into_iter()
        .filter(|t| {
            let c = t.coord();
            !spec.cells.contains(&c) && !cover.get(&c).is_some_and(|code| spec.landcover_codes.contains(code))
        })
        .collect();
    TargetReport {
        counts: TargetCounts {
            suppressed_no_spray: report.counts.suppressed_no_spray + (before - targets.len()),
            ..report.counts
        },
        targets,
        ..report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Align,
    Mask,
    Classify,
    NoSpray,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Align => "align",
            Stage::Mask => "mask",
            Stage::Classify => "classify",
            Stage::NoSpray => "no-spray filter",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<V> {
    fn at(self, stage: Stage) -> std::result::Result<V, PipelineError>;
}

impl<V> AtStage<V> for Result<V> {
    fn at(self, stage: Stage) -> std::result::Result<V, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub task: Task,
    pub layers: BTreeMap<Parameter, PathBuf>,
    pub model: PathBuf,
    #[serde(default)]
    pub mask: MaskSpec,
    #[serde(default)]
    pub no_spray: Option<PathBuf>,
    pub cell_size_m: f64,
    #[serde(default)]
    pub timestamp: Option<String>,
    /// Where `targets.json` and `targets.csv` go; nothing is written when unset.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(task: Task, layers: BTreeMap<Parameter, PathBuf>, model: PathBuf) -> Self {
        PipelineConfig {
            task,
            layers,
            model,
            mask: MaskSpec::default(),
            no_spray: None,
            cell_size_m: DEFAULT_CELL_SIZE_M,
            timestamp: None,
            out_dir: None,
        }
    }

    /// Digest of the run settings. The model is identified separately by
    /// its content digest, so neither its path nor the output directory
    /// counts.
    pub fn hash(&self) -> String {
        let mut inputs = self.clone();
        inputs.model = PathBuf::new();
        inputs.out_dir = None;
        let json = serde_json::to_string(&inputs).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

pub const TARGETS_JSON: &str = "targets.json";
pub const TARGETS_CSV: &str = "targets.csv";

/// Hotspot run: load, align, mask, classify, drop no-spray targets.
pub fn run_prevention<T: Scalar>(config: &PipelineConfig) -> std::result::Result<TargetReport<T>, PipelineError> {
    expect_task(config, Task::Prevention)?;
    run(config)
}

/// Wildfire run: load, align, mask, classify.
pub fn run_detection<T: Scalar>(config: &PipelineConfig) -> std::result::Result<TargetReport<T>, PipelineError> {
    expect_task(config, Task::Detection)?;
    run(config)
}

fn expect_task(config: &PipelineConfig, task: Task) -> std::result::Result<(), PipelineError> {
    if config.task != task {
        return Err(Error::invalid(
            "task",
            format!("config is for {}, expected {task}", config.task),
        ))
        .at(Stage::Load);
    }
    Ok(())
}

/// Runs whichever task the config names. Outputs are written only after
/// every stage has succeeded.
pub fn run<T: Scalar>(config: &PipelineConfig) -> std::result::Result<TargetReport<T>, PipelineError> {
    let schema = config.task.schema();
    let layers = schema
        .required_parameters()
        .into_iter()
        .map(|p| match config.layers.get(&p) {
            Some(path) => load_layer::<T>(path, p),
            None => Err(Error::MissingLayer(p)),
        })
        .collect::<Result<Vec<ParameterLayer<T>>>>()
        .at(Stage::Load)?;
    let model: RandomForestModel<T> = load_model(&config.model).at(Stage::Load)?;
    let no_spray = match &config.no_spray {
        Some(p) => NoSpraySpec::load(p).at(Stage::Load)?,
        None => NoSpraySpec::default(),
    };

    let grid = align_layers(&layers, schema, config.cell_size_m).at(Stage::Align)?;
    let grid = apply_mask(grid, &config.mask);
    let mut report = classify_grid(&grid, &model).at(Stage::Classify)?;
    report = filter_no_spray(report, &no_spray, &grid);
    report.metadata.timestamp = config.timestamp.clone();
    report.metadata.config_hash = Some(config.hash());

    if let Some(dir) = &config.out_dir {
        write_report(dir.join(TARGETS_JSON), &report).at(Stage::Write)?;
        write_targets_csv(dir.join(TARGETS_CSV), &report).at(Stage::Write)?;
    }
    Ok(report)
}

pub fn write_report<T: Scalar>(path: impl AsRef<Path>, report: &TargetReport<T>) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_report<T: Scalar>(path: impl AsRef<Path>) -> Result<TargetReport<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `lat,lon,vote_fraction`
pub fn write_targets_csv<T: Scalar>(path: impl AsRef<Path>, report: &TargetReport<T>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("lat,lon,vote_fraction\n");
    for t in &report.targets {
        out.push_str(&format!("{},{},{}\n", t.lat, t.lon, t.vote_fraction));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::{GridCell, MaskReason};
    use crate::learners::TreeNode;

    fn constant_model(task: Task, class: u8) -> RandomForestModel<f64> {
        RandomForestModel::from_trees(
            task.schema(),
            vec![TreeNode::Leaf { class, counts: [1, 1] }; 3],
            1,
            1,
            0,
            true,
        )
        .unwrap()
    }

    fn prevention_grid(cells: Vec<(f64, f64, f64)>) -> FeatureGrid<f64> {
        let cells = cells
            .into_iter()
            .map(|(lat, lon, land)| GridCell::unmasked(Coord::new(lat, lon), vec![land, 5.0, 0.0, 0.2, 300.0, 0.4]))
            .collect();
        FeatureGrid::new(Task::Prevention.schema(), 111.0, cells).unwrap()
    }

    #[test]
    fn fully_masked_grid_has_no_targets() {
        let grid = apply_mask(
            prevention_grid(vec![(0.0, 0.0, 11.0), (0.0, 1.0, 11.0)]),
            &MaskSpec::default(),
        );
        let r = classify_grid(&grid, &constant_model(Task::Prevention, 1)).unwrap();
        assert!(r.targets.is_empty());
        assert_eq!(r.counts.positive_cells, 0);
        assert_eq!(r.counts.masked_cells, 2);
    }

    #[test]
    fn single_cell_unanimous_positive() {
        let grid = prevention_grid(vec![(1.0, 2.0, 42.0)]);
        let r = classify_grid(&grid, &constant_model(Task::Prevention, 1)).unwrap();
        assert_eq!(
            r.targets,
            vec![Target {
                lat: 1.0,
                lon: 2.0,
                vote_fraction: 1.0
            }]
        );
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let grid = prevention_grid(vec![(1.0, 2.0, 42.0)]);
        assert!(matches!(
            classify_grid(&grid, &constant_model(Task::Detection, 1)),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn targets_are_canonically_ordered() {
        let grid = prevention_grid(vec![(2.0, 0.0, 42.0), (1.0, 5.0, 42.0), (1.0, -5.0, 42.0)]);
        let r = classify_grid(&grid, &constant_model(Task::Prevention, 1)).unwrap();
        let order: Vec<(f64, f64)> = r.targets.iter().map(|t| (t.lat, t.lon)).collect();
        assert_eq!(order, vec![(1.0, -5.0), (1.0, 5.0), (2.0, 0.0)]);
    }

    fn three_targets() -> (FeatureGrid<f64>, TargetReport<f64>) {
        let grid = prevention_grid(vec![(0.0, 0.0, 42.0), (0.0, 1.0, 52.0), (0.0, 2.0, 42.0)]);
        let r = classify_grid(&grid, &constant_model(Task::Prevention, 1)).unwrap();
        (grid, r)
    }

    #[test]
    fn empty_no_spray_is_identity() {
        let (grid, r) = three_targets();
        assert_eq!(filter_no_spray(r.clone(), &NoSpraySpec::default(), &grid), r);
    }

    #[test]
    fn no_spray_everywhere_removes_everything() {
        let (grid, r) = three_targets();
        let spec = NoSpraySpec {
            cells: r.targets.iter().map(Target::coord).collect(),
            ..Default::default()
        };
        let f = filter_no_spray(r.clone(), &spec, &grid);
        assert!(f.targets.is_empty());
        assert_eq!(f.counts.suppressed_no_spray, r.counts.positive_cells);
    }

    #[test]
    fn no_spray_one_of_three() {
        let (grid, r) = three_targets();
        let spec = NoSpraySpec {
            cells: [Coord::new(0.0, 2.0)].into(),
            ..Default::default()
        };
        let f = filter_no_spray(r.clone(), &spec, &grid);
        assert_eq!(f.targets.len(), 2);
        assert_eq!(f.counts.suppressed_no_spray, 1);
        assert_eq!(f.targets[..], r.targets[..2]);

        let by_cover = NoSpraySpec {
            landcover_codes: [52].into(),
            ..Default::default()
        };
        let f = filter_no_spray(r, &by_cover, &grid);
        assert_eq!(f.targets.iter().map(|t| t.lon).collect::<Vec<_>>(), vec![0.0, 2.0]);
    }

    #[test]
    fn detection_reports_are_not_filtered() {
        let cells = vec![GridCell::unmasked(
            Coord::new(0.0, 0.0),
            vec![42.0, 0.005, 310.0, 0.2, -0.1, 60.0, 430.0],
        )];
        let grid = FeatureGrid::new(Task::Detection.schema(), 111.0, cells).unwrap();
        let r = classify_grid(&grid, &constant_model(Task::Detection, 1)).unwrap();
        let spec = NoSpraySpec {
            cells: [Coord::new(0.0, 0.0)].into(),
            ..Default::default()
        };
        assert_eq!(filter_no_spray(r.clone(), &spec, &grid), r);
    }

    #[test]
    fn masked_cells_are_skipped_even_if_incomplete() {
        let mut grid = prevention_grid(vec![(0.0, 0.0, 42.0)]);
        let cell = GridCell {
            coord: Coord::new(1.0, 0.0),
            features: vec![None; 6],
            mask_reason: Some(MaskReason::MissingData),
        };
        let mut cells = grid.cells().to_vec();
        cells.push(cell);
        grid = FeatureGrid::new(grid.schema, 111.0, cells).unwrap();
        let r = classify_grid(&grid, &constant_model(Task::Prevention, 1)).unwrap();
        assert_eq!(r.targets.len(), 1);
        assert_eq!(r.counts.total_cells, 2);
    }
}
