use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use wildfire_core::dispatch::{load_plan, plan_dispatch, save_plan, simulate_fleet, write_event_log, write_plan_csv};
use wildfire_core::evaluation::{
    accuracy, confusion, cross_validate, evaluate, stratified_split, tune_sweep, write_sweep_csv,
};
use wildfire_core::geodata::{
    align_layers, apply_mask, load_labeled_dataset, load_layer, save_grid, synth_generate, synth_scene,
    write_labeled_dataset, write_layer, SceneSpec,
};
use wildfire_core::learners::{
    fit_forest, fit_logistic, load_model, model_id, save_model, ForestParams, LogisticParams,
};
use wildfire_core::pipeline::{self, load_report, PipelineConfig, TARGETS_JSON};
use wildfire_core::{
    Coord, DispatchPlan, EvaluationReport, LabeledDataset, RandomForestModel, SynthConfig, TargetReport, Task,
};

use crate::config::RunConfig;

pub const MODEL_JSON: &str = "model.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const EVALUATION_JSON: &str = "evaluation.json";
pub const GRID_JSON: &str = "grid.json";
pub const PLAN_JSON: &str = "plan.json";
pub const PLAN_CSV: &str = "plan.csv";
pub const EVENTS_CSV: &str = "events.csv";
pub const LABELED_CSV: &str = "labeled.csv";
pub const RUN_TOML: &str = "run.toml";

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))
}

fn load_data(cfg: &RunConfig, task: Task) -> Result<LabeledDataset> {
    let path = cfg.existing("data", cfg.data.as_ref())?;
    Ok(load_labeled_dataset(&path, task.schema())?)
}

/// Labeled samples plus a synthetic scene and a config that runs the
/// whole pipeline on it.
pub fn synth(cfg: &RunConfig) -> Result<String> {
    let task = cfg.task()?;
    prepare_out(cfg)?;
    let data = synth_generate::<f64>(task, cfg.n_per_class, cfg.seed)?;
    write_labeled_dataset(cfg.out_file(LABELED_CSV), &data)?;

    let spec = SceneSpec {
        cell_size_m: cfg.cell_size_m,
        ..SceneSpec::default()
    };
    let scene = synth_scene(&SynthConfig::for_task(task), &spec, cfg.seed)?;
    let layer_dir = cfg.out_file("layers");
    fs::create_dir_all(&layer_dir).with_context(|| format!("creating {}", layer_dir.display()))?;
    let mut run = format!(
        "task = \"{task}\"\nseed = {}\ncell-size-m = {}\ndata = \"{LABELED_CSV}\"\n\n[layers]\n",
        cfg.seed, cfg.cell_size_m
    );
    for layer in &scene.layers {
        let name = format!("{}.csv", layer.parameter);
        write_layer(layer_dir.join(&name), layer)?;
        run.push_str(&format!("{} = \"layers/{name}\"\n", layer.parameter));
    }
    fs::write(cfg.out_file(RUN_TOML), run).with_context(|| format!("writing {RUN_TOML}"))?;

    Ok(format!(
        "synth: {} {task} samples and a {}x{} scene (seed {}) -> {}",
        data.len(),
        spec.rows,
        spec.cols,
        cfg.seed,
        cfg.out.display()
    ))
}

pub fn ingest(cfg: &RunConfig) -> Result<String> {
    let task = cfg.task()?;
    let paths = cfg.required_layers(task)?;
    prepare_out(cfg)?;
    // align_layers anchors on the first layer it is given, so load in schema order.
    let layers = task
        .schema()
        .required_parameters()
        .into_iter()
        .map(|p| load_layer::<f64>(&paths[&p], p))
        .collect::<wildfire_core::Result<Vec<_>>>()?;
    let grid = apply_mask(align_layers(&layers, task.schema(), cfg.cell_size_m)?, &cfg.mask);
    save_grid(cfg.out_file(GRID_JSON), &grid)?;
    Ok(format!(
        "ingest: {} cells, {} masked -> {}",
        grid.cells().len(),
        grid.masked_count(),
        cfg.out_file(GRID_JSON).display()
    ))
}

fn train_model(cfg: &RunConfig, task: Task) -> Result<(RandomForestModel, usize)> {
    let data = load_data(cfg, task)?;
    let model = fit_forest(&data, cfg.n_estimators, cfg.max_depth, cfg.seed)?;
    save_model(cfg.out_file(MODEL_JSON), &model)?;
    Ok((model, data.len()))
}

pub fn train(cfg: &RunConfig) -> Result<String> {
    let task = cfg.task()?;
    cfg.existing("data", cfg.data.as_ref())?;
    prepare_out(cfg)?;
    let (model, n) = train_model(cfg, task)?;
    Ok(format!(
        "train: {} trees, max depth {}, {n} samples, seed {} (model {}) -> {}",
        model.n_estimators(),
        model.max_depth,
        cfg.seed,
        model_id(&model)?,
        cfg.out_file(MODEL_JSON).display()
    ))
}

pub fn tune(cfg: &RunConfig) -> Result<String> {
    let task = cfg.task()?;
    cfg.existing("data", cfg.data.as_ref())?;
    prepare_out(cfg)?;
    let data = load_data(cfg, task)?;
    let (train, test) = stratified_split(&data, cfg.train_fraction, cfg.seed)?;
    let result = tune_sweep(&train, &test, cfg.seed)?;
    write_sweep_csv(cfg.out_file(SWEEP_CSV), &result)?;
    let b = result.best;
    Ok(format!(
        "tune: {} cells, best n-estimators={} max-depth={} test accuracy {:.4} (train {:.4}), seed {} -> {}",
        result.grid.len(),
        b.n_estimators,
        b.max_depth,
        b.test_accuracy,
        b.train_accuracy,
        cfg.seed,
        cfg.out_file(SWEEP_CSV).display()
    ))
}

#[derive(Serialize)]
struct EvaluationFile<'a> {
    task: Task,
    seed: u64,
    n_estimators: usize,
    max_depth: usize,
    train_fraction: f64,
    k: usize,
    train_samples: usize,
    test_samples: usize,
    model_id: String,
    logistic_accuracy: f64,
    #[serde(flatten)]
    report: &'a EvaluationReport,
}

/// Held-out metrics on a stratified split, k-fold CV on the whole file,
/// and the logistic baseline on the same split.
pub fn evaluate_cmd(cfg: &RunConfig) -> Result<String> {
    let task = cfg.task()?;
    cfg.existing("data", cfg.data.as_ref())?;
    let given_model = match &cfg.model {
        Some(_) => Some(cfg.existing("model", cfg.model.as_ref())?),
        None => None,
    };
    prepare_out(cfg)?;
    let data = load_data(cfg, task)?;
    let (train, test) = stratified_split(&data, cfg.train_fraction, cfg.seed)?;
    let model: RandomForestModel = match given_model {
        Some(path) => load_model(path)?,
        None => fit_forest(&train, cfg.n_estimators, cfg.max_depth, cfg.seed)?,
    };
    let truth = test.labels();
    let cv = cross_validate(
        &data,
        &ForestParams::new(cfg.n_estimators, cfg.max_depth),
        cfg.k,
        cfg.seed,
    )?;
    let report = evaluate::<f64>(&model.predict_dataset(&test)?, &truth)?.with_cv(cv);

    let logistic = fit_logistic(&train, &LogisticParams::default())?;
    let logistic_accuracy = accuracy::<f64>(&confusion(&logistic.predict_dataset(&test)?, &truth)?)?;

    let file = EvaluationFile {
        task,
        seed: cfg.seed,
        n_estimators: model.n_estimators(),
        max_depth: model.max_depth,
        train_fraction: cfg.train_fraction,
        k: cfg.k,
        train_samples: train.len(),
        test_samples: test.len(),
        model_id: model_id(&model)?,
        logistic_accuracy,
        report: &report,
    };
    let path = cfg.out_file(EVALUATION_JSON);
    let mut json = serde_json::to_string_pretty(&file)?;
    json.push('\n');
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(format!(
        "evaluate: accuracy {:.4}, precision {:.4}, recall {:.4}, {}-fold CV {:.4}, logistic {:.4} -> {}",
        report.accuracy,
        report.precision_macro,
        report.recall_macro,
        cfg.k,
        report.cv_mean_accuracy.unwrap_or(f64::NAN),
        logistic_accuracy,
        path.display()
    ))
}

fn classify_with(cfg: &RunConfig, task: Task, model: PathBuf) -> Result<TargetReport> {
    let layers = cfg.required_layers(task)?;
    let no_spray = match &cfg.no_spray {
        Some(_) => Some(cfg.existing("no-spray", cfg.no_spray.as_ref())?),
        None => None,
    };
    prepare_out(cfg)?;
    let config = PipelineConfig {
        task,
        layers,
        model,
        mask: cfg.mask.clone(),
        no_spray,
        cell_size_m: cfg.cell_size_m,
        timestamp: cfg.timestamp.clone(),
        out_dir: Some(cfg.out.clone()),
    };
    Ok(pipeline::run::<f64>(&config)?)
}

fn classify_summary(report: &TargetReport, cfg: &RunConfig) -> String {
    let c = report.counts;
    format!(
        "classify: {} targets in {} cells ({} masked, {} withheld as no-spray) -> {}",
        report.targets.len(),
        c.total_cells,
        c.masked_cells,
        c.suppressed_no_spray,
        cfg.out_file(TARGETS_JSON).display()
    )
}

pub fn classify(cfg: &RunConfig) -> Result<String> {
    let task = cfg.task()?;
    let model = cfg.existing("model", cfg.model.as_ref())?;
    let report = classify_with(cfg, task, model)?;
    Ok(classify_summary(&report, cfg))
}

fn dispatch_report(cfg: &RunConfig, report: &TargetReport) -> Result<DispatchPlan> {
    let plan = plan_dispatch(report, &cfg.drone, report.metadata.cell_size_m, cfg.band_width_m)?;
    save_plan(cfg.out_file(PLAN_JSON), &plan)?;
    write_plan_csv(cfg.out_file(PLAN_CSV), &plan)?;
    Ok(plan)
}

fn dispatch_summary(plan: &DispatchPlan, cfg: &RunConfig) -> String {
    let t = plan.totals;
    format!(
        "dispatch: {} targets, {:.2} acres, {} drones in parallel or {} single-drone trips ({:.0} min) -> {}",
        t.targets,
        t.acres_to_spray,
        t.drones_parallel,
        t.trips_single_drone,
        t.minutes_single_drone,
        cfg.out_file(PLAN_JSON).display()
    )
}

pub fn dispatch(cfg: &RunConfig) -> Result<String> {
    let default = cfg.out_file(TARGETS_JSON);
    let path = cfg.existing("targets", Some(cfg.targets.as_ref().unwrap_or(&default)))?;
    prepare_out(cfg)?;
    let report: TargetReport = load_report(&path).with_context(|| format!("reading {}", path.display()))?;
    let plan = dispatch_report(cfg, &report)?;
    Ok(dispatch_summary(&plan, cfg))
}

/// Mean position of the plan's targets; the origin for an empty plan.
fn default_base(plan: &DispatchPlan) -> Coord {
    let n = plan.entries.len();
    if n == 0 {
        return Coord::new(0.0, 0.0);
    }
    let lat = plan.entries.iter().map(|e| e.lat).sum::<f64>() / n as f64;
    let lon = plan.entries.iter().map(|e| e.lon).sum::<f64>() / n as f64;
    Coord::new(lat, lon)
}

fn simulate_plan(cfg: &RunConfig, plan: &DispatchPlan) -> Result<String> {
    let base = cfg.base.unwrap_or_else(|| default_base(plan));
    let log = simulate_fleet(plan, cfg.fleet_size, base, &cfg.drone)?;
    write_event_log(cfg.out_file(EVENTS_CSV), &log)?;
    Ok(format!(
        "simulate: {} events, {} drones from {:.5},{:.5}, all done after {:.1} min -> {}",
        log.events.len(),
        cfg.fleet_size,
        base.lat,
        base.lon,
        log.makespan() / 60.0,
        cfg.out_file(EVENTS_CSV).display()
    ))
}

pub fn simulate(cfg: &RunConfig) -> Result<String> {
    let default = cfg.out_file(PLAN_JSON);
    let path = cfg.existing("plan", Some(cfg.plan.as_ref().unwrap_or(&default)))?;
    prepare_out(cfg)?;
    let plan: DispatchPlan = load_plan(&path).with_context(|| format!("reading {}", path.display()))?;
    simulate_plan(cfg, &plan)
}

/// Train (when labeled data is given), classify, dispatch, simulate.
pub fn run_pipeline(cfg: &RunConfig) -> Result<String> {
    let task = cfg.task()?;
    let model = match &cfg.data {
        Some(_) => {
            cfg.existing("data", cfg.data.as_ref())?;
            None
        }
        None => Some(cfg.existing("model", cfg.model.as_ref())?),
    };
    cfg.required_layers(task)?;
    prepare_out(cfg)?;
    let mut lines = Vec::new();
    let model = match model {
        Some(path) => path,
        None => {
            lines.push(train(cfg)?);
            cfg.out_file(MODEL_JSON)
        }
    };
    let report = classify_with(cfg, task, model)?;
    lines.push(classify_summary(&report, cfg));
    let plan = dispatch_report(cfg, &report)?;
    lines.push(dispatch_summary(&plan, cfg));
    lines.push(simulate_plan(cfg, &plan)?);
    Ok(lines.join("\n"))
}

pub fn print_config(cfg: &RunConfig) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(cfg)?);
    Ok(())
}
