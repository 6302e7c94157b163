//! Closed-loop fault-injection laboratory for an adaptive cruise control and
//! lane keeping driving agent.
//!
//! The dynamics, sensors, controller, hazard monitor and fault engine are
//! generic over the scalar type; the aliases below fix it to `f64` or `f32`.
//! Campaigns and the image pipeline run in `f64` and 8-bit pixels.

pub mod campaign;
pub mod controller;
pub mod error;
pub mod fault;
pub mod hazard;
pub mod plant;
pub mod scalar;
pub mod sensors;
pub mod vision;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type WorldState = plant::WorldState<f64>;
pub type SensorFrame = sensors::SensorFrame<f64>;
pub type ControlOutput = controller::ControlOutput<f64>;
pub type HazardEvent = hazard::HazardEvent<f64>;
pub type ContextObservables = fault::ContextObservables<f64>;

pub type WorldStateF32 = plant::WorldState<f32>;
pub type SensorFrameF32 = sensors::SensorFrame<f32>;
pub type ControlOutputF32 = controller::ControlOutput<f32>;
pub type HazardEventF32 = hazard::HazardEvent<f32>;
pub type ContextObservablesF32 = fault::ContextObservables<f32>;
