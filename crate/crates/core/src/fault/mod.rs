//! Fault models, context triggers and sensor-frame corruption.

pub mod context;
pub mod model;

pub use context::{
    classify_cell, classify_context, eval_trigger, hazardous_cells, ContextCell, ContextObservables,
    ControlAction, HazardLabel, HwtBucket, RsBucket, TriggerMode, TriggerSpec,
};
pub use model::{apply_fault, ActivationEvent, FaultModel, FaultSpec, FaultState, FaultTarget};
