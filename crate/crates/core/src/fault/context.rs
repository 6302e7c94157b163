//! Hazard context table for accelerate/decelerate commands and the
//! injection triggers built from it.

use serde::{Deserialize, Serialize};

use crate::plant::WorldState;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlAction {
    Accelerate,
    Decelerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HwtBucket {
    /// HWT <= safeHWT
    Le,
    /// HWT > safeHWT
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RsBucket {
    /// RS <= 0 (opening or steady)
    #[serde(rename = "le0")]
    Le0,
    /// RS > 0 (closing)
    #[serde(rename = "gt0")]
    Gt0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HazardLabel {
    None,
    H1,
    H2,
}

/// One row of the context table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextCell {
    pub hwt: HwtBucket,
    pub rs: RsBucket,
}

impl ContextCell {
    pub const ALL: [ContextCell; 4] = [
        ContextCell { hwt: HwtBucket::Le, rs: RsBucket::Le0 },
        ContextCell { hwt: HwtBucket::Le, rs: RsBucket::Gt0 },
        ContextCell { hwt: HwtBucket::Gt, rs: RsBucket::Le0 },
        ContextCell { hwt: HwtBucket::Gt, rs: RsBucket::Gt0 },
    ];

    pub fn of<T: Scalar>(obs: &ContextObservables<T>, safe_hwt: T) -> Self {
        ContextCell {
            hwt: if obs.hwt <= safe_hwt { HwtBucket::Le } else { HwtBucket::Gt },
            rs: if obs.rs <= T::zero() { RsBucket::Le0 } else { RsBucket::Gt0 },
        }
    }
}

/// Headway time and relative speed computed from ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ContextObservables<T> {
    /// relative distance / host speed, s
    pub hwt: T,
    /// host speed - lead speed, m/s (positive = closing)
    pub rs: T,
}

impl<T: Scalar> ContextObservables<T> {
    /// `None` when there is no lead or the host is slower than `min_speed`;
    /// every context predicate is false in that case.
    pub fn from_world(world: &WorldState<T>, min_speed: T) -> Option<Self> {
        let d_rel = world.relative_distance()?;
        if world.host_speed <= min_speed {
            return None;
        }
        Some(Self {
            hwt: d_rel / world.host_speed,
            rs: world.host_speed - world.lead_speed,
        })
    }
}

/// Hazard label for a control action in a context.
pub fn classify_cell(action: ControlAction, provided: bool, cell: ContextCell) -> HazardLabel {
    use ControlAction::*;
    use HwtBucket::*;
    use RsBucket::*;
    match (action, provided, cell.hwt, cell.rs) {
        (Accelerate, true, _, Gt0) => HazardLabel::H1,
        (Accelerate, false, Gt, Le0) => HazardLabel::H2,
        (Decelerate, true, Gt, Le0) => HazardLabel::H2,
        (Decelerate, false, _, Gt0) => HazardLabel::H1,
        _ => HazardLabel::None,
    }
}

pub fn classify_context<T: Scalar>(
    action: ControlAction,
    provided: bool,
    obs: Option<&ContextObservables<T>>,
    safe_hwt: T,
) -> HazardLabel {
    match obs {
        Some(o) => classify_cell(action, provided, ContextCell::of(o, safe_hwt)),
        None => HazardLabel::None,
    }
}

/// Cells in which the given unsafe control action is hazardous.
pub fn hazardous_cells(action: ControlAction, provided: bool) -> Vec<ContextCell> {
    ContextCell::ALL
        .into_iter()
        .filter(|&c| classify_cell(action, provided, c) != HazardLabel::None)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TriggerSpec {
    /// Active on every tick the ground-truth context matches (not latched).
    Guided {
        hwt: HwtBucket,
        rs: RsBucket,
        safe_hwt: f64,
    },
    /// Active from `t_start` to the end of the run.
    Random { t_start: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerMode {
    Guided,
    Random,
}

impl TriggerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TriggerMode::Guided => "guided",
            TriggerMode::Random => "random",
        }
    }
}

impl TriggerSpec {
    pub fn mode(&self) -> TriggerMode {
        match self {
            TriggerSpec::Guided { .. } => TriggerMode::Guided,
            TriggerSpec::Random { .. } => TriggerMode::Random,
        }
    }
}

pub fn eval_trigger<T: Scalar>(spec: &TriggerSpec, obs: Option<&ContextObservables<T>>, t: T) -> bool {
    match *spec {
        TriggerSpec::Guided { hwt, rs, safe_hwt } => {
            obs.is_some_and(|o| ContextCell::of(o, T::lit(safe_hwt)) == ContextCell { hwt, rs })
        }
        TriggerSpec::Random { t_start } => t >= T::lit(t_start),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(hwt: f64, rs: f64) -> ContextObservables<f64> {
        ContextObservables { hwt, rs }
    }

    #[test]
    fn guided_trigger_examples() {
        let spec = TriggerSpec::Guided { hwt: HwtBucket::Le, rs: RsBucket::Gt0, safe_hwt: 2.5 };
        assert!(eval_trigger(&spec, Some(&obs(2.0, 5.0)), 0.0));
        let spec = TriggerSpec::Guided { hwt: HwtBucket::Gt, rs: RsBucket::Le0, safe_hwt: 2.5 };
        assert!(!eval_trigger(&spec, Some(&obs(2.0, 5.0)), 0.0));
        assert!(!eval_trigger::<f64>(&spec, None, 0.0));
    }

    #[test]
    fn random_trigger_latches_on_time() {
        let spec = TriggerSpec::Random { t_start: 12.0 };
        assert!(!eval_trigger::<f64>(&spec, None, 11.99));
        assert!(eval_trigger::<f64>(&spec, None, 12.0));
        assert!(eval_trigger::<f64>(&spec, None, 29.99));
    }

    #[test]
    fn classify_examples() {
        let le_gt = ContextCell { hwt: HwtBucket::Le, rs: RsBucket::Gt0 };
        let gt_le = ContextCell { hwt: HwtBucket::Gt, rs: RsBucket::Le0 };
        let le_le = ContextCell { hwt: HwtBucket::Le, rs: RsBucket::Le0 };
        assert_eq!(classify_cell(ControlAction::Accelerate, true, le_gt), HazardLabel::H1);
        assert_eq!(classify_cell(ControlAction::Accelerate, false, gt_le), HazardLabel::H2);
        assert_eq!(classify_cell(ControlAction::Decelerate, true, le_le), HazardLabel::None);
    }

    #[test]
    fn boundary_buckets() {
        assert_eq!(
            ContextCell::of(&obs(2.5, 0.0), 2.5),
            ContextCell { hwt: HwtBucket::Le, rs: RsBucket::Le0 }
        );
        assert_eq!(
            ContextCell::of(&obs(2.5000001, 1e-9), 2.5),
            ContextCell { hwt: HwtBucket::Gt, rs: RsBucket::Gt0 }
        );
    }

    #[test]
    fn observables_need_speed_and_lead() {
        let mut w = WorldState {
            t: 0.0,
            host_pos: 0.0,
            host_speed: 20.0,
            host_accel: 0.0,
            lat_offset: 0.0,
            heading: 0.0,
            steer_angle: 0.0,
            lead_present: true,
            lead_pos: 40.0,
            lead_speed: 15.0,
            lane_half_width: 1.85,
        };
        let o = ContextObservables::from_world(&w, 0.5).unwrap();
        assert_eq!(o.hwt, 2.0);
        assert_eq!(o.rs, 5.0);
        w.host_speed = 0.3;
        assert!(ContextObservables::from_world(&w, 0.5).is_none());
        w.host_speed = 20.0;
        w.lead_present = false;
        assert!(ContextObservables::from_world(&w, 0.5).is_none());
    }

    #[test]
    fn hazardous_cells_per_action() {
        assert_eq!(hazardous_cells(ControlAction::Accelerate, true).len(), 2);
        assert_eq!(hazardous_cells(ControlAction::Accelerate, false).len(), 1);
        assert_eq!(hazardous_cells(ControlAction::Decelerate, true).len(), 1);
        assert_eq!(hazardous_cells(ControlAction::Decelerate, false).len(), 2);
    }
}
