use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::coverage::{cell_acres, drones_for_area, perimeter_acres, DroneSpec};
use crate::error::{Error, Result};
use crate::geodata::{Coord, Task};
use crate::pipeline::TargetReport;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SprayMode {
    /// Cover the whole cell (hotspot prevention).
    Area,
    /// Lay a band along the cell edge (fire suppression).
    Perimeter,
}

impl fmt::Display for SprayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SprayMode::Area => "area",
            SprayMode::Perimeter => "perimeter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PlanEntry<T> {
    pub lat: f64,
    pub lon: f64,
    pub mode: SprayMode,
    pub vote_fraction: T,
    pub acres_to_spray: T,
    pub drones_parallel: u64,
    pub trips_single_drone: u64,
    pub minutes_parallel: T,
    pub minutes_single_drone: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FleetSummary<T> {
    pub targets: usize,
    pub acres_to_spray: T,
    pub drones_parallel: u64,
    pub trips_single_drone: u64,
    pub minutes_single_drone: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DispatchPlan<T> {
    pub task: Task,
    pub cell_size_m: T,
    pub band_width_m: T,
    pub drone: DroneSpec<T>,
    /// Highest vote fraction first, then latitude, then longitude.
    pub entries: Vec<PlanEntry<T>>,
    pub totals: FleetSummary<T>,
}

/// Sizes the effort for every target: whole-cell area for prevention,
/// an edge band for detection. Multi-cell fires are planned per cell.
pub fn plan_dispatch<T: Scalar>(
    report: &TargetReport<T>,
    spec: &DroneSpec<T>,
    cell_size_m: T,
    band_width_m: T,
) -> Result<DispatchPlan<T>> {
    spec.validate()?;
    let (mode, acres) = match report.task {
        Task::Prevention => (SprayMode::Area, cell_acres(cell_size_m)?),
        Task::Detection => (SprayMode::Perimeter, perimeter_acres(cell_size_m, band_width_m)?),
    };
    let need = drones_for_area(acres, spec)?;

    let mut targets = report.targets.clone();
    targets.sort_by(|a, b| {
        b.vote_fraction
            .partial_cmp(&a.vote_fraction)
            .unwrap_or(Ordering::Equal)
            .then_with(|| Coord::new(a.lat, a.lon).cmp(&Coord::new(b.lat, b.lon)))
    });
    let entries: Vec<PlanEntry<T>> = targets
        .iter()
        .map(|t| PlanEntry {
            lat: t.lat,
            lon: t.lon,
            mode,
            vote_fraction: t.vote_fraction,
            acres_to_spray: acres,
            drones_parallel: need.drones_parallel,
            trips_single_drone: need.trips_single_drone,
            minutes_parallel: need.minutes_parallel,
            minutes_single_drone: need.minutes_single_drone,
        })
        .collect();

    let totals = FleetSummary {
        targets: entries.len(),
        acres_to_spray: entries.iter().fold(T::zero(), |a, e| a + e.acres_to_spray),
        drones_parallel: entries.iter().map(|e| e.drones_parallel).sum(),
        trips_single_drone: entries.iter().map(|e| e.trips_single_drone).sum(),
        minutes_single_drone: entries.iter().fold(T::zero(), |a, e| a + e.minutes_single_drone),
    };
    Ok(DispatchPlan {
        task: report.task,
        cell_size_m,
        band_width_m,
        drone: *spec,
        entries,
        totals,
    })
}

pub fn save_plan<T: Scalar>(path: impl AsRef<Path>, plan: &DispatchPlan<T>) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(plan)?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_plan<T: Scalar>(path: impl AsRef<Path>) -> Result<DispatchPlan<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `lat,lon,mode,acres,drones,trips,minutes_single`
pub fn write_plan_csv<T: Scalar>(path: impl AsRef<Path>, plan: &DispatchPlan<T>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("lat,lon,mode,acres,drones,trips,minutes_single\n");
    for e in &plan.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.lat, e.lon, e.mode, e.acres_to_spray, e.drones_parallel, e.trips_single_drone, e.minutes_single_drone
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{RunMetadata, Target, TargetCounts};
    use approx::assert_abs_diff_eq;

    fn report(task: Task, targets: Vec<(f64, f64, f64)>) -> TargetReport<f64> {
        TargetReport {
            task,
            metadata: RunMetadata::default(),
            counts: TargetCounts::default(),
            targets: targets
                .into_iter()
                .map(|(lat, lon, vote_fraction)| Target {
                    lat,
                    lon,
                    vote_fraction,
                })
                .collect(),
        }
    }

    #[test]
    fn one_prevention_target() {
        let p = plan_dispatch(
            &report(Task::Prevention, vec![(1.0, 2.0, 1.0)]),
            &DroneSpec::default(),
            111.0,
            10.0,
        )
        .unwrap();
        let e = p.entries[0];
        assert_eq!(e.mode, SprayMode::Area);
        assert_abs_diff_eq!(e.acres_to_spray, 3.0445, epsilon = 1e-4);
        assert_eq!(e.drones_parallel, 2);
    }

    #[test]
    fn empty_report_gives_empty_plan() {
        let p = plan_dispatch(&report(Task::Prevention, vec![]), &DroneSpec::default(), 111.0, 10.0).unwrap();
        assert!(p.entries.is_empty());
        assert_eq!(p.totals.targets, 0);
        assert_eq!(p.totals.acres_to_spray, 0.0);
        assert_eq!(p.totals.drones_parallel, 0);
    }

    #[test]
    fn one_detection_target_uses_perimeter() {
        let p = plan_dispatch(
            &report(Task::Detection, vec![(1.0, 2.0, 0.8)]),
            &DroneSpec::default(),
            111.0,
            10.0,
        )
        .unwrap();
        let e = p.entries[0];
        assert_eq!(e.mode, SprayMode::Perimeter);
        assert_abs_diff_eq!(e.acres_to_spray, 4440.0 / 4047.0, epsilon = 1e-12);
        assert_eq!(e.drones_parallel, 1);
    }

    #[test]
    fn ordering_and_totals() {
        let r = report(
            Task::Prevention,
            vec![(1.0, 0.0, 0.6), (0.0, 0.0, 1.0), (0.5, 0.0, 0.6)],
        );
        let p = plan_dispatch(&r, &DroneSpec::default(), 111.0, 10.0).unwrap();
        let order: Vec<f64> = p.entries.iter().map(|e| e.lat).collect();
        assert_eq!(order, vec![0.0, 0.5, 1.0]);
        assert_eq!(p.totals.targets, 3);
        assert_eq!(p.totals.drones_parallel, 6);
        assert_eq!(p.totals.trips_single_drone, 6);
        assert_eq!(p.totals.minutes_single_drone, 90.0);
        assert_eq!(
            p.totals.acres_to_spray,
            p.entries.iter().map(|e| e.acres_to_spray).sum::<f64>()
        );
    }

    #[test]
    fn csv_and_json_outputs() {
        let r = report(Task::Prevention, vec![(1.0, 2.0, 1.0)]);
        let p = plan_dispatch(&r, &DroneSpec::default(), 111.0, 10.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_plan_csv(dir.path().join("plan.csv"), &p).unwrap();
        let text = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "lat,lon,mode,acres,drones,trips,minutes_single"
        );
        assert!(text.lines().nth(1).unwrap().starts_with("1,2,area,3.04"));
        save_plan(dir.path().join("plan.json"), &p).unwrap();
        assert_eq!(load_plan::<f64>(dir.path().join("plan.json")).unwrap(), p);
    }
}
