use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use wildfire_core::dispatch::{plan_dispatch, simulate_fleet, DroneSpec, SprayMode};
use wildfire_core::geodata::{
    align_layers, apply_mask, synth_generate, synth_scene, write_layer, SceneSpec, SynthConfig, SynthScene,
};
use wildfire_core::learners::{fit_forest, save_model};
use wildfire_core::pipeline::{classify_grid, load_report, run, NoSpraySpec, PipelineConfig, TARGETS_JSON};
use wildfire_core::{Coord, Task};

fn setup(dir: &Path, task: Task) -> (PipelineConfig, SynthScene<f64>) {
    let spec = SceneSpec::default();
    let scene = synth_scene::<f64>(&SynthConfig::for_task(task), &spec, 5).unwrap();
    let mut layers = BTreeMap::new();
    for layer in &scene.layers {
        let path = dir.join(format!("{}.csv", layer.parameter));
        write_layer(&path, layer).unwrap();
        layers.insert(layer.parameter, path);
    }
    let train = synth_generate::<f64>(task, 189, 42).unwrap();
    let model = fit_forest(&train, 7, 5, 42).unwrap();
    let model_path = dir.join("model.json");
    save_model(&model_path, &model).unwrap();
    (PipelineConfig::new(task, layers, model_path), scene)
}

#[test]
fn planted_block_is_recovered() {
    for task in [Task::Prevention, Task::Detection] {
        let dir = tempfile::tempdir().unwrap();
        let (config, scene) = setup(dir.path(), task);
        let report = run::<f64>(&config).unwrap();
        assert_eq!(report.counts.total_cells, 400);
        // the water strip along the southern edge
        assert_eq!(report.counts.masked_cells, 20);

        let hot: BTreeSet<Coord> = scene.truth.iter().filter(|t| t.1 == 1).map(|t| t.0).collect();
        let found: BTreeSet<Coord> = report.targets.iter().map(|t| t.coord()).collect();
        let hits = found.intersection(&hot).count() as f64;
        assert!(hits / hot.len() as f64 >= 0.9, "{task}: recall {hits}/{}", hot.len());
        assert!(
            hits / found.len() as f64 >= 0.9,
            "{task}: precision {hits}/{}",
            found.len()
        );
    }
}

#[test]
fn run_equals_composed_stages() {
    let dir = tempfile::tempdir().unwrap();
    let (config, scene) = setup(dir.path(), Task::Prevention);
    let grid = apply_mask(
        align_layers(&scene.layers, Task::Prevention.schema(), config.cell_size_m).unwrap(),
        &config.mask,
    );
    let model = wildfire_core::learners::load_model(&config.model).unwrap();
    let manual = classify_grid(&grid, &model).unwrap();

    let report = run::<f64>(&config).unwrap();
    assert_eq!(report.targets, manual.targets);
    assert_eq!(report.counts, manual.counts);
    assert_eq!(report.metadata.model_id, manual.metadata.model_id);
    assert_eq!(report.metadata.config_hash, Some(config.hash()));
}

#[test]
fn no_spray_cells_are_dropped_and_written_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (mut config, _) = setup(dir.path(), Task::Prevention);
    let full = run::<f64>(&config).unwrap();
    let blocked: BTreeSet<Coord> = full.targets.iter().take(3).map(|t| t.coord()).collect();
    let no_spray = NoSpraySpec {
        cells: blocked.clone(),
        landcover_codes: BTreeSet::new(),
    };
    let path = dir.path().join("no_spray.json");
    std::fs::write(&path, serde_json::to_string(&no_spray).unwrap()).unwrap();
    config.no_spray = Some(path);
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    config.out_dir = Some(out.clone());

    let filtered = run::<f64>(&config).unwrap();
    assert_eq!(filtered.counts.suppressed_no_spray, 3);
    assert_eq!(filtered.targets.len(), full.targets.len() - 3);
    assert!(filtered.targets.iter().all(|t| !blocked.contains(&t.coord())));
    assert_eq!(load_report::<f64>(out.join(TARGETS_JSON)).unwrap(), filtered);
}

#[test]
fn detection_targets_become_a_flyable_perimeter_plan() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = setup(dir.path(), Task::Detection);
    let report = run::<f64>(&config).unwrap();
    let spec = DroneSpec::default();
    let plan = plan_dispatch(&report, &spec, config.cell_size_m, 10.0).unwrap();
    assert_eq!(plan.entries.len(), report.targets.len());
    assert!(plan.entries.iter().all(|e| e.mode == SprayMode::Perimeter));

    let log = simulate_fleet(&plan, 3, Coord::new(33.99, -118.5), &spec).unwrap();
    let planned: Vec<u64> = plan.entries.iter().map(|e| e.trips_single_drone).collect();
    assert_eq!(log.sprayed_trips(plan.entries.len()), planned);
}
