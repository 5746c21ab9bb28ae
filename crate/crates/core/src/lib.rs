//! Wildfire hotspot prediction and active-fire detection over gridded
//! geospatial layers, with drone dispatch planning.
//!
//! The crate is organised around the four stages of a run:
//!
//! 1. [`geodata`]: load per-parameter layers, align them onto one grid,
//!    derive NDVI/BAI and mask cells where fire cannot occur.
//! 2. [`learners`]: train a random forest (or the logistic baseline) on a
//!    labeled dataset.
//! 3. [`pipeline`]: classify every unmasked cell and drop targets inside
//!    no-spray zones.
//! 4. [`dispatch`]: size the drone effort per target and simulate a fleet
//!    flying the plan.
//!
//! [`evaluation`] holds the split, metric, cross-validation and tuning
//! utilities used to pick hyperparameters.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! command-line tool uses.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispatch;
pub mod error;
pub mod evaluation;
pub mod geodata;
pub mod learners;
pub mod pipeline;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use geodata::{Coord, MaskReason, MaskSpec, Parameter, Task, TaskSchema};
pub use scalar::Scalar;

pub type ParameterLayer = geodata::ParameterLayer<f64>;
pub type FeatureGrid = geodata::FeatureGrid<f64>;
pub type GridCell = geodata::GridCell<f64>;
pub type LabeledDataset = geodata::LabeledDataset<f64>;
pub type Sample = geodata::Sample<f64>;
pub type SynthConfig = geodata::SynthConfig<f64>;
pub type SynthScene = geodata::SynthScene<f64>;

pub type TreeNode = learners::TreeNode<f64>;
pub type RandomForestModel = learners::RandomForestModel<f64>;
pub type LogisticModel = learners::LogisticModel<f64>;

pub type EvaluationReport = evaluation::EvaluationReport<f64>;
pub type TuningResult = evaluation::TuningResult<f64>;

pub type TargetReport = pipeline::TargetReport<f64>;

pub type DroneSpec = dispatch::DroneSpec<f64>;
pub type DispatchPlan = dispatch::DispatchPlan<f64>;
pub type SimulationLog = dispatch::SimulationLog<f64>;
