//! Flag and config-file resolution. File keys use the flag spellings;
//! flags given on the command line win.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use wildfire_core::dispatch::DEFAULT_BAND_WIDTH_M;
use wildfire_core::evaluation::{DEFAULT_FOLDS, DEFAULT_TRAIN_FRACTION, SWEEP_MAX};
use wildfire_core::geodata::{nlcd, DEFAULT_CELL_SIZE_M, DEFAULT_RAINFALL_THRESHOLD};
use wildfire_core::{Coord, DroneSpec, MaskSpec, Parameter, Task};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_N_ESTIMATORS: usize = 7;
pub const DEFAULT_MAX_DEPTH: usize = 5;
pub const DEFAULT_FLEET_SIZE: usize = 4;
pub const DEFAULT_N_PER_CLASS: usize = 189;

/// A configuration problem. Always names the key at fault.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(key: &str, reason: impl std::fmt::Display) -> Invalid {
    Invalid(format!("invalid `{key}`: {reason}"))
}

fn parse_layer(s: &str) -> Result<(Parameter, PathBuf), String> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected PARAMETER=PATH, got `{s}`"))?;
    Ok((name.trim().parse()?, PathBuf::from(path.trim())))
}

fn parse_coord(s: &str) -> Result<Coord, String> {
    let (lat, lon) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LAT,LON, got `{s}`"))?;
    let lat = lat.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let lon = lon.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Coord::new(lat, lon))
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub task: Option<Task>,
    /// TOML or JSON file whose keys mirror the flag names.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Labeled CSV: lat,lon,<features...>,label
    #[arg(long, global = true, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    pub model: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub n_estimators: Option<usize>,
    #[arg(long, global = true)]
    pub max_depth: Option<usize>,
    /// Cross-validation folds.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub cell_size_m: Option<f64>,
    #[arg(long, global = true)]
    pub band_width_m: Option<f64>,
    #[arg(long, global = true)]
    pub fleet_size: Option<usize>,
    /// Accept n-estimators and max-depth above 15.
    #[arg(long, global = true)]
    pub allow_extended: bool,
    /// Print the resolved configuration as JSON before running.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// One input layer, e.g. `--layer temperature=temp.csv`. Repeatable.
    #[arg(long = "layer", global = true, value_name = "PARAMETER=PATH", value_parser = parse_layer)]
    pub layers: Vec<(Parameter, PathBuf)>,
    /// JSON file with `cells` and `landcover_codes` where spraying is not allowed.
    #[arg(long, global = true, value_name = "FILE")]
    pub no_spray: Option<PathBuf>,
    /// Target report for `dispatch` (default: <out>/targets.json).
    #[arg(long, global = true, value_name = "FILE")]
    pub targets: Option<PathBuf>,
    /// Dispatch plan for `simulate` (default: <out>/plan.json).
    #[arg(long, global = true, value_name = "FILE")]
    pub plan: Option<PathBuf>,
    /// Drone base as `LAT,LON` (default: centroid of the plan's targets).
    #[arg(long, global = true, value_name = "LAT,LON", value_parser = parse_coord, allow_hyphen_values = true)]
    pub base: Option<Coord>,
    /// Samples per class for `synth`.
    #[arg(long, global = true)]
    pub n_per_class: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct MaskFile {
    excluded_landcover_codes: Option<Vec<i64>>,
    rainfall_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct DroneFile {
    spray_rate: Option<f64>,
    flight_minutes_loaded: Option<f64>,
    turnaround_minutes: Option<f64>,
    payload_kg: Option<f64>,
    speed_mps: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    task: Option<Task>,
    data: Option<PathBuf>,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    n_estimators: Option<usize>,
    max_depth: Option<usize>,
    k: Option<usize>,
    cell_size_m: Option<f64>,
    band_width_m: Option<f64>,
    fleet_size: Option<usize>,
    allow_extended: Option<bool>,
    layers: Option<BTreeMap<Parameter, PathBuf>>,
    no_spray: Option<PathBuf>,
    targets: Option<PathBuf>,
    plan: Option<PathBuf>,
    base: Option<Coord>,
    n_per_class: Option<usize>,
    train_fraction: Option<f64>,
    timestamp: Option<String>,
    mask: Option<MaskFile>,
    drone: Option<DroneFile>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self, Invalid> {
        let text = fs::read_to_string(path).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?
        };
        // Paths in a config file are relative to the file itself.
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.data);
        rebase(&mut cfg.model);
        rebase(&mut cfg.out);
        rebase(&mut cfg.no_spray);
        rebase(&mut cfg.targets);
        rebase(&mut cfg.plan);
        if let Some(layers) = &mut cfg.layers {
            for p in layers.values_mut() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Everything a command needs, after merging defaults, file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub task: Option<Task>,
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub k: usize,
    pub cell_size_m: f64,
    pub band_width_m: f64,
    pub fleet_size: usize,
    pub allow_extended: bool,
    pub layers: BTreeMap<Parameter, PathBuf>,
    pub no_spray: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub base: Option<Coord>,
    pub n_per_class: usize,
    pub train_fraction: f64,
    pub timestamp: Option<String>,
    pub mask: MaskSpec,
    pub drone: DroneSpec,
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self, Invalid> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let mut layers = file.layers.unwrap_or_default();
        layers.extend(flags.layers.iter().cloned());

        let mask_file = file.mask.unwrap_or_default();
        let mask = MaskSpec::new(
            mask_file
                .excluded_landcover_codes
                .unwrap_or_else(|| nlcd::DEFAULT_EXCLUDED.to_vec()),
            mask_file.rainfall_threshold.unwrap_or(DEFAULT_RAINFALL_THRESHOLD),
        )
        .map_err(|e| invalid("mask", e))?;

        let d = file.drone.unwrap_or_default();
        let defaults = DroneSpec::default();
        let drone = DroneSpec {
            spray_rate: d.spray_rate.unwrap_or(defaults.spray_rate),
            flight_minutes_loaded: d.flight_minutes_loaded.unwrap_or(defaults.flight_minutes_loaded),
            turnaround_minutes: d.turnaround_minutes.unwrap_or(defaults.turnaround_minutes),
            payload_kg: d.payload_kg.unwrap_or(defaults.payload_kg),
            speed_mps: d.speed_mps.unwrap_or(defaults.speed_mps),
        };

        let cfg = RunConfig {
            task: flags.task.or(file.task),
            data: flags.data.clone().or(file.data),
            model: flags.model.clone().or(file.model),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            n_estimators: flags.n_estimators.or(file.n_estimators).unwrap_or(DEFAULT_N_ESTIMATORS),
            max_depth: flags.max_depth.or(file.max_depth).unwrap_or(DEFAULT_MAX_DEPTH),
            k: flags.k.or(file.k).unwrap_or(DEFAULT_FOLDS),
            cell_size_m: flags.cell_size_m.or(file.cell_size_m).unwrap_or(DEFAULT_CELL_SIZE_M),
            band_width_m: flags.band_width_m.or(file.band_width_m).unwrap_or(DEFAULT_BAND_WIDTH_M),
            fleet_size: flags.fleet_size.or(file.fleet_size).unwrap_or(DEFAULT_FLEET_SIZE),
            allow_extended: flags.allow_extended || file.allow_extended.unwrap_or(false),
            layers,
            no_spray: flags.no_spray.clone().or(file.no_spray),
            targets: flags.targets.clone().or(file.targets),
            plan: flags.plan.clone().or(file.plan),
            base: flags.base.or(file.base),
            n_per_class: flags.n_per_class.or(file.n_per_class).unwrap_or(DEFAULT_N_PER_CLASS),
            train_fraction: file.train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION),
            timestamp: file.timestamp,
            mask,
            drone,
        };
        cfg.check_values()?;
        Ok(cfg)
    }

    fn check_values(&self) -> Result<(), Invalid> {
        let limit = if self.allow_extended { usize::MAX } else { SWEEP_MAX };
        for (key, v) in [("n-estimators", self.n_estimators), ("max-depth", self.max_depth)] {
            if v < 1 || v > limit {
                let range = if self.allow_extended {
                    "at least 1".to_string()
                } else {
                    format!("within 1..={SWEEP_MAX} (pass --allow-extended to go higher)")
                };
                return Err(invalid(key, format!("{v} must be {range}")));
            }
        }
        if self.k < 2 {
            return Err(invalid("k", format!("{} folds; need at least 2", self.k)));
        }
        if !(self.cell_size_m > 0.0) || !self.cell_size_m.is_finite() {
            return Err(invalid("cell-size-m", format!("{} must be positive", self.cell_size_m)));
        }
        if !(self.band_width_m >= 0.0) || self.band_width_m > self.cell_size_m / 2.0 {
            return Err(invalid(
                "band-width-m",
                format!("{} must be between 0 and half the cell size", self.band_width_m),
            ));
        }
        if self.fleet_size < 1 {
            return Err(invalid("fleet-size", "need at least one drone"));
        }
        if self.n_per_class < 1 {
            return Err(invalid("n-per-class", "need at least one sample per class"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(
                "train-fraction",
                format!("{} must be strictly between 0 and 1", self.train_fraction),
            ));
        }
        if let Some(base) = self.base {
            if !base.in_range() {
                return Err(invalid(
                    "base",
                    format!("{}, {} is not a valid coordinate", base.lat, base.lon),
                ));
            }
        }
        self.drone.validate().map_err(|e| invalid("drone", e))
    }

    pub fn task(&self) -> Result<Task, Invalid> {
        self.task
            .ok_or_else(|| invalid("task", "required (prevention or detection)"))
    }

    pub fn existing(&self, key: &str, path: Option<&PathBuf>) -> Result<PathBuf, Invalid> {
        let path = path.ok_or_else(|| invalid(key, "required"))?;
        if !path.exists() {
            return Err(invalid(key, format!("{} does not exist", path.display())));
        }
        Ok(path.clone())
    }

    /// Every layer the task needs, each pointing at an existing file.
    pub fn required_layers(&self, task: Task) -> Result<BTreeMap<Parameter, PathBuf>, Invalid> {
        let mut out = BTreeMap::new();
        for p in task.schema().required_parameters() {
            let key = format!("layers.{p}");
            out.insert(p, self.existing(&key, self.layers.get(&p))?);
        }
        Ok(out)
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}
