use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square meters in one acre, rounded (exactly 4046.856...).
pub const SQ_M_PER_ACRE: f64 = 4047.0;

/// Width of the retardant band laid along a burning cell's edge.
pub const DEFAULT_BAND_WIDTH_M: f64 = 10.0;

/// Spraying drone performance at full payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DroneSpec<T> {
    /// acres per hour
    pub spray_rate: T,
    pub flight_minutes_loaded: T,
    /// Refill and reset time between trips.
    pub turnaround_minutes: T,
    pub payload_kg: T,
    /// Cruise speed, used by the simulator only.
    pub speed_mps: T,
}

impl<T: Scalar> Default for DroneSpec<T> {
    fn default() -> Self {
        DroneSpec {
            spray_rate: T::of(10.0),
            flight_minutes_loaded: T::of(10.0),
            turnaround_minutes: T::of(10.0),
            payload_kg: T::of(10.0),
            speed_mps: T::of(12.0),
        }
    }
}

impl<T: Scalar> DroneSpec<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("spray_rate", self.spray_rate),
            ("flight_minutes_loaded", self.flight_minutes_loaded),
            ("turnaround_minutes", self.turnaround_minutes),
            ("payload_kg", self.payload_kg),
            ("speed_mps", self.speed_mps),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Area of one square cell in acres.
pub fn cell_acres<T: Scalar>(cell_size_m: T) -> Result<T> {
    if !(cell_size_m > T::zero()) || !cell_size_m.is_finite() {
        return Err(Error::invalid(
            "cell_size_m",
            format!("must be positive, got {cell_size_m}"),
        ));
    }
    Ok(cell_size_m * cell_size_m / T::of(SQ_M_PER_ACRE))
}

/// Acres one drone covers in a single loaded flight.
pub fn capacity_per_flight<T: Scalar>(spec: &DroneSpec<T>) -> T {
    spec.spray_rate * spec.flight_minutes_loaded / T::of(60.0)
}

/// Effort to spray an area either with parallel drones or one drone
/// making repeated trips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct CoverageNeed<T> {
    pub drones_parallel: u64,
    pub trips_single_drone: u64,
    pub minutes_parallel: T,
    pub minutes_single_drone: T,
}

pub fn drones_for_area<T: Scalar>(acres: T, spec: &DroneSpec<T>) -> Result<CoverageNeed<T>> {
    if !(acres >= T::zero()) || !acres.is_finite() {
        return Err(Error::invalid("acres", format!("must be non-negative, got {acres}")));
    }
    spec.validate()?;
    let n = (acres / capacity_per_flight(spec))
        .ceil()
        .to_u64()
        .ok_or_else(|| Error::invalid("acres", "drone count overflows"))?;
    if n == 0 {
        return Ok(CoverageNeed {
            drones_parallel: 0,
            trips_single_drone: 0,
            minutes_parallel: T::zero(),
            minutes_single_drone: T::zero(),
        });
    }
    let trips = T::of(n as f64);
    Ok(CoverageNeed {
        drones_parallel: n,
        trips_single_drone: n,
        minutes_parallel: spec.flight_minutes_loaded,
        minutes_single_drone: trips * spec.flight_minutes_loaded + (trips - T::one()) * spec.turnaround_minutes,
    })
}

/// Acres of a retardant ring of width `band_width_m` just inside the edge
/// of a square cell, approximated as four full-length strips.
pub fn perimeter_acres<T: Scalar>(cell_size_m: T, band_width_m: T) -> Result<T> {
    cell_acres(cell_size_m)?;
    if !(band_width_m >= T::zero()) {
        return Err(Error::invalid(
            "band_width_m",
            format!("must be non-negative, got {band_width_m}"),
        ));
    }
    if band_width_m > cell_size_m / T::of(2.0) {
        return Err(Error::invalid(
            "band_width_m",
            format!("{band_width_m} m exceeds half of the {cell_size_m} m cell"),
        ));
    }
    Ok(T::of(4.0) * cell_size_m * band_width_m / T::of(SQ_M_PER_ACRE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cell_acres_examples() {
        assert_abs_diff_eq!(cell_acres(111.0).unwrap(), 12321.0 / 4047.0, epsilon = 1e-12);
        assert_eq!((cell_acres(111.0_f64).unwrap() * 100.0).round() / 100.0, 3.04);
        // sqrt(4047) = 63.6160...
        assert_abs_diff_eq!(cell_acres(63.6_f64).unwrap(), 0.99950, epsilon = 1e-4);
        assert!(cell_acres(0.0_f64).is_err());
    }

    #[test]
    fn capacity_examples() {
        let d = DroneSpec::<f64>::default();
        assert_abs_diff_eq!(capacity_per_flight(&d), 10.0 / 6.0, epsilon = 1e-12);
        let slow = DroneSpec {
            spray_rate: 0.0001,
            ..d
        };
        assert_abs_diff_eq!(capacity_per_flight(&slow), 0.0001 / 6.0, epsilon = 1e-15);
        let need = drones_for_area(3.04, &slow).unwrap();
        assert_eq!(need.drones_parallel, (3.04_f64 / (0.0001 / 6.0)).ceil() as u64);
        let hour = DroneSpec {
            flight_minutes_loaded: 60.0,
            ..d
        };
        assert_abs_diff_eq!(capacity_per_flight(&hour), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn drones_for_area_examples() {
        let d = DroneSpec::<f64>::default();
        let n = drones_for_area(3.04, &d).unwrap();
        assert_eq!((n.drones_parallel, n.trips_single_drone), (2, 2));
        assert_eq!((n.minutes_parallel, n.minutes_single_drone), (10.0, 30.0));
        let z = drones_for_area(0.0, &d).unwrap();
        assert_eq!(
            (
                z.drones_parallel,
                z.trips_single_drone,
                z.minutes_parallel,
                z.minutes_single_drone
            ),
            (0, 0, 0.0, 0.0)
        );
        let one = drones_for_area(1.0, &d).unwrap();
        assert_eq!(
            (
                one.drones_parallel,
                one.trips_single_drone,
                one.minutes_parallel,
                one.minutes_single_drone
            ),
            (1, 1, 10.0, 10.0)
        );
        assert!(drones_for_area(-1.0, &d).is_err());
    }

    #[test]
    fn perimeter_examples() {
        assert_abs_diff_eq!(perimeter_acres(111.0, 10.0).unwrap(), 4440.0 / 4047.0, epsilon = 1e-12);
        assert_eq!(perimeter_acres(111.0_f64, 0.0).unwrap(), 0.0);
        assert!(perimeter_acres(111.0_f64, 60.0).is_err());
        assert!(perimeter_acres(111.0_f64, 55.5).is_ok());
    }

    #[test]
    fn spec_validation() {
        let d = DroneSpec::<f64>::default();
        assert!(d.validate().is_ok());
        assert!(DroneSpec { speed_mps: 0.0, ..d }.validate().is_err());
        assert!(drones_for_area(1.0, &DroneSpec { spray_rate: -1.0, ..d }).is_err());
    }

    proptest! {
        #[test]
        fn more_area_never_needs_fewer_drones(a in 0.0f64..100.0, extra in 0.0f64..100.0) {
            let d = DroneSpec::default();
            let n1 = drones_for_area(a, &d).unwrap();
            let n2 = drones_for_area(a + extra, &d).unwrap();
            prop_assert!(n2.drones_parallel >= n1.drones_parallel);
            if n1.drones_parallel >= 1 {
                prop_assert!(n1.minutes_single_drone >= n1.minutes_parallel);
            }
        }

        #[test]
        fn scaling_capacity_scales_drone_count(a in 0.0f64..100.0, c in 0.1f64..10.0) {
            let d = DroneSpec::<f64>::default();
            let scaled = DroneSpec { spray_rate: d.spray_rate * c, ..d };
            let n = drones_for_area(a, &scaled).unwrap().drones_parallel;
            prop_assert_eq!(n, (a / capacity_per_flight(&scaled)).ceil() as u64);
        }
    }
}
