//! Drone coverage arithmetic, dispatch plans and a discrete-event fleet simulator.

mod coverage;
mod plan;
mod sim;

pub use coverage::{
    capacity_per_flight, cell_acres, drones_for_area, perimeter_acres, CoverageNeed, DroneSpec, DEFAULT_BAND_WIDTH_M,
    SQ_M_PER_ACRE,
};
pub use plan::{load_plan, plan_dispatch, save_plan, write_plan_csv, DispatchPlan, FleetSummary, PlanEntry, SprayMode};
pub use sim::{simulate_fleet, write_event_log, Event, EventKind, SimulationLog};
