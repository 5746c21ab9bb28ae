use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::coverage::DroneSpec;
use super::plan::DispatchPlan;
use crate::error::{Error, Result};
use crate::geodata::Coord;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Depart,
    Arrive,
    SprayComplete,
    Return,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Depart => "depart",
            EventKind::Arrive => "arrive",
            EventKind::SprayComplete => "spray_complete",
            EventKind::Return => "return",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Event<T> {
    pub t_seconds: T,
    pub drone_id: usize,
    pub kind: EventKind,
    /// Where the drone is when the event fires.
    pub lat: f64,
    pub lon: f64,
    /// Index into the plan's entries.
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct SimulationLog<T> {
    /// Sorted by time, then drone id.
    pub events: Vec<Event<T>>,
}

impl<T: Scalar> SimulationLog<T> {
    /// Completed spray trips for each of `n_targets` plan entries.
    pub fn sprayed_trips(&self, n_targets: usize) -> Vec<u64> {
        let mut out = vec![0; n_targets];
        for e in &self.events {
            if e.kind == EventKind::SprayComplete && e.target < n_targets {
                out[e.target] += 1;
            }
        }
        out
    }

    /// Depart-to-return intervals per drone, in time order.
    pub fn busy_intervals(&self) -> BTreeMap<usize, Vec<(T, T)>> {
        let mut open: BTreeMap<usize, T> = BTreeMap::new();
        let mut out: BTreeMap<usize, Vec<(T, T)>> = BTreeMap::new();
        for e in &self.events {
            match e.kind {
                EventKind::Depart => {
                    open.insert(e.drone_id, e.t_seconds);
                }
                EventKind::Return => {
                    if let Some(start) = open.remove(&e.drone_id) {
                        out.entry(e.drone_id).or_default().push((start, e.t_seconds));
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Time of the last event, zero for an empty log.
    pub fn makespan(&self) -> T {
        self.events.iter().fold(T::zero(), |m, e| m.max(e.t_seconds))
    }
}

/// Runs the plan against `fleet_size` drones based at `base`.
///
/// Trips are handed out in plan order; whichever drone becomes free first
/// (lowest id on ties) takes the next one. One trip is depart, arrive,
/// spray for a full loaded flight, return, then turnaround before the
/// drone is free again.
pub fn simulate_fleet<T: Scalar>(
    plan: &DispatchPlan<T>,
    fleet_size: usize,
    base: Coord,
    spec: &DroneSpec<T>,
) -> Result<SimulationLog<T>> {
    if fleet_size == 0 {
        return Err(Error::invalid("fleet_size", "must be at least 1"));
    }
    if !base.in_range() {
        return Err(Error::invalid(
            "base",
            format!("coordinates out of range: {}, {}", base.lat, base.lon),
        ));
    }
    spec.validate()?;

    let spray = spec.flight_minutes_loaded * T::of(60.0);
    let turnaround = spec.turnaround_minutes * T::of(60.0);
    let mut free_at = vec![T::zero(); fleet_size];
    let mut events = Vec::new();

    for (target, entry) in plan.entries.iter().enumerate() {
        let site = Coord::new(entry.lat, entry.lon);
        let travel = T::of(base.distance_m(&site)) / spec.speed_mps;
        for _ in 0..entry.trips_single_drone {
            let drone = (0..fleet_size)
                .min_by(|&a, &b| {
                    free_at[a]
                        .partial_cmp(&free_at[b])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                })
                .unwrap_or(0);
            let depart = free_at[drone];
            let arrive = depart + travel;
            let done = arrive + spray;
            let back = done + travel;
            let at = |t, kind, c: Coord| Event {
                t_seconds: t,
                drone_id: drone,
                kind,
                lat: c.lat,
                lon: c.lon,
                target,
            };
            events.push(at(depart, EventKind::Depart, base));
            events.push(at(arrive, EventKind::Arrive, site));
            events.push(at(done, EventKind::SprayComplete, site));
            events.push(at(back, EventKind::Return, base));
            free_at[drone] = back + turnaround;
        }
    }

    // Stable, so a drone's own events keep their causal order on equal times.
    events.sort_by(|a, b| {
        a.t_seconds
            .partial_cmp(&b.t_seconds)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.drone_id.cmp(&b.drone_id))
    });
    Ok(SimulationLog { events })
}

/// `t_seconds,drone_id,event,lat,lon`
pub fn write_event_log<T: Scalar>(path: impl AsRef<Path>, log: &SimulationLog<T>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("t_seconds,drone_id,event,lat,lon\n");
    for e in &log.events {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.t_seconds, e.drone_id, e.kind, e.lat, e.lon
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::plan::{FleetSummary, PlanEntry, SprayMode};
    use crate::geodata::Task;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn plan(targets: &[(f64, f64, u64)]) -> DispatchPlan<f64> {
        let entries: Vec<PlanEntry<f64>> = targets
            .iter()
            .map(|&(lat, lon, trips)| PlanEntry {
                lat,
                lon,
                mode: SprayMode::Area,
                vote_fraction: 1.0,
                acres_to_spray: trips as f64 * 10.0 / 6.0,
                drones_parallel: trips,
                trips_single_drone: trips,
                minutes_parallel: 10.0,
                minutes_single_drone: 10.0,
            })
            .collect();
        DispatchPlan {
            task: Task::Prevention,
            cell_size_m: 111.0,
            band_width_m: 10.0,
            drone: DroneSpec::default(),
            totals: FleetSummary {
                targets: entries.len(),
                acres_to_spray: 0.0,
                drones_parallel: 0,
                trips_single_drone: entries.iter().map(|e| e.trips_single_drone).sum(),
                minutes_single_drone: 0.0,
            },
            entries,
        }
    }

    const BASE: Coord = Coord { lat: 34.0, lon: -118.0 };

    #[test]
    fn one_drone_two_trips() {
        let p = plan(&[(34.01, -118.0, 2)]);
        let spec = DroneSpec::default();
        let log = simulate_fleet(&p, 1, BASE, &spec).unwrap();
        let d = BASE.distance_m(&Coord::new(34.01, -118.0)) / 12.0;
        let expected = 4.0 * d + 2.0 * 600.0 + 600.0;
        assert_abs_diff_eq!(log.makespan(), expected, epsilon = 1e-9);
        assert_eq!(log.events.len(), 8);
        assert_eq!(log.sprayed_trips(1), vec![2]);
    }

    #[test]
    fn two_drones_spray_in_parallel() {
        let p = plan(&[(34.01, -118.0, 2)]);
        let log = simulate_fleet(&p, 2, BASE, &DroneSpec::default()).unwrap();
        let sprays: Vec<&Event<f64>> = log
            .events
            .iter()
            .filter(|e| e.kind == EventKind::SprayComplete)
            .collect();
        assert_eq!(sprays.len(), 2);
        assert_eq!(sprays[0].t_seconds, sprays[1].t_seconds);
        assert_eq!((sprays[0].drone_id, sprays[1].drone_id), (0, 1));
    }

    #[test]
    fn empty_plan_and_bad_fleet() {
        let p = plan(&[]);
        assert!(simulate_fleet(&p, 3, BASE, &DroneSpec::default())
            .unwrap()
            .events
            .is_empty());
        assert!(matches!(
            simulate_fleet(&p, 0, BASE, &DroneSpec::default()),
            Err(Error::InvalidArgument { name: "fleet_size", .. })
        ));
    }

    #[test]
    fn log_csv() {
        let log = simulate_fleet(&plan(&[(34.0, -118.0, 1)]), 1, BASE, &DroneSpec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.csv");
        write_event_log(&path, &log).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_seconds,drone_id,event,lat,lon");
        assert_eq!(lines[1], "0,0,depart,34,-118");
        assert_eq!(lines[3], "600,0,spray_complete,34,-118");
        assert_eq!(lines.len(), 5);
    }

    proptest! {
        #[test]
        fn conservation(
            targets in prop::collection::vec((33.9f64..34.1, -118.1f64..-117.9, 0u64..5), 0..8),
            fleet in 1usize..5,
        ) {
            let p = plan(&targets);
            let log = simulate_fleet(&p, fleet, BASE, &DroneSpec::default()).unwrap();
            let planned: Vec<u64> = targets.iter().map(|t| t.2).collect();
            prop_assert_eq!(log.sprayed_trips(targets.len()), planned);
            for intervals in log.busy_intervals().values() {
                for w in intervals.windows(2) {
                    prop_assert!(w[0].1 < w[1].0);
                }
            }
        }
    }
}
