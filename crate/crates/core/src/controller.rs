//! The driving agent under test: ACC, LKAS, FCW and the alert manager.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::sensors::{CarReading, RadarReading, SensorFrame, VisionReading};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    /// Cruise speed gain, 1/s.
    pub k_v: f64,
    /// Gap gain, 1/s^2.
    pub k_d: f64,
    /// Relative-speed gain, 1/s.
    pub k_s: f64,
    /// Desired headway, s.
    pub safe_hwt: f64,
    /// Gap kept at standstill, m.
    pub standstill_gap: f64,
    /// Lane-center gain, 1/m.
    pub k_p: f64,
    /// Steer-angle damping gain, 1/rad.
    pub k_h: f64,
    pub steer_saturation: f64,
    /// Required deceleration that raises FCW, m/s^2.
    pub fcw_decel: f64,
    pub accel_min: f64,
    pub accel_max: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            k_v: 0.5,
            k_d: 0.2,
            k_s: 0.8,
            safe_hwt: 2.5,
            standstill_gap: 5.0,
            k_p: 0.8,
            k_h: 12.0,
            steer_saturation: 1.0,
            fcw_decel: 3.0,
            accel_min: -8.0,
            accel_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ControlOutput<T> {
    pub accel_cmd: T,
    pub steer_torque: T,
    pub engaged: bool,
}

impl<T: Scalar> ControlOutput<T> {
    pub fn disengaged() -> Self {
        Self {
            accel_cmd: T::zero(),
            steer_torque: T::zero(),
            engaged: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlertKind {
    SteerSaturated,
    Fcw,
    CanError,
    ModelError,
}

impl AlertKind {
    pub const ALL: [AlertKind; 4] = [
        AlertKind::SteerSaturated,
        AlertKind::Fcw,
        AlertKind::CanError,
        AlertKind::ModelError,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AlertKind::SteerSaturated => "SteerSaturated",
            AlertKind::Fcw => "FCW",
            AlertKind::CanError => "CanError",
            AlertKind::ModelError => "ModelError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Alert<T> {
    pub kind: AlertKind,
    pub t: T,
}

/// Longitudinal command from the nearest radar track and the car speed.
pub fn acc_step<T: Scalar>(p: &ControllerParams, radar: &RadarReading<T>, car: &CarReading<T>) -> T {
    let (lo, hi) = (T::lit(p.accel_min), T::lit(p.accel_max));
    let cruise = (T::lit(p.k_v) * (car.cruise_set - car.speed)).clamp_to(lo, hi);
    let cmd = match radar.nearest() {
        Some(track) => {
            let desired = T::lit(p.standstill_gap) + T::lit(p.safe_hwt) * car.speed;
            let gap = T::lit(p.k_d) * (track.d_rel - desired) + T::lit(p.k_s) * track.v_rel;
            cruise.min(gap)
        }
        None => cruise,
    };
    cmd.clamp_to(lo, hi)
}

/// Steer torque toward the lane center; also reports whether the raw
/// torque exceeded the saturation threshold.
pub fn lkas_step<T: Scalar>(p: &ControllerParams, vision: &VisionReading<T>, car: &CarReading<T>) -> (T, bool) {
    let error = -(vision.left_lane_x + vision.right_lane_x) / T::lit(2.0);
    let raw = T::lit(p.k_p) * error + T::lit(p.k_h) * (T::zero() - car.steer_angle);
    let saturated = raw.abs() > T::lit(p.steer_saturation);
    (raw.clamp_to(-T::one(), T::one()), saturated)
}

/// Deceleration needed to match the lead's speed before reaching it.
pub fn required_decel<T: Scalar>(d_rel: T, v_rel: T) -> T {
    v_rel * v_rel / (T::lit(2.0) * d_rel)
}

pub fn fcw_check<T: Scalar>(p: &ControllerParams, radar: &RadarReading<T>, _car: &CarReading<T>) -> bool {
    if !radar.valid {
        return false;
    }
    match radar.nearest() {
        Some(track) if track.v_rel < T::zero() && track.d_rel > T::zero() => {
            required_decel(track.d_rel, track.v_rel) > T::lit(p.fcw_decel)
        }
        _ => false,
    }
}

/// Per-run alert state: latched disengagement and first-occurrence times.
#[derive(Debug, Clone)]
pub struct AlertManager<T> {
    params: ControllerParams,
    engaged: bool,
    first: [Option<T>; 4],
}

impl<T: Scalar> AlertManager<T> {
    pub fn new(params: ControllerParams) -> Self {
        Self {
            params,
            engaged: true,
            first: [None; 4],
        }
    }

    pub fn engaged(&self) -> bool {
        self.engaged
    }

    pub fn first_occurrence(&self, kind: AlertKind) -> Option<T> {
        self.first[kind.index()]
    }

    pub fn first_alerts(&self) -> Vec<Alert<T>> {
        AlertKind::ALL
            .iter()
            .filter_map(|&kind| self.first_occurrence(kind).map(|t| Alert { kind, t }))
            .collect()
    }

    /// Runs the controllers on one frame and returns the command together with
    /// the alerts raised on this tick. Losing radar or vision disengages for
    /// the rest of the run.
    pub fn step(&mut self, frame: &SensorFrame<T>, t: T) -> (ControlOutput<T>, Vec<Alert<T>>) {
        let mut alerts = Vec::new();
        if !frame.radar.valid {
            alerts.push(Alert { kind: AlertKind::CanError, t });
            self.engaged = false;
        }
        if !frame.vision.valid {
            alerts.push(Alert { kind: AlertKind::ModelError, t });
            self.engaged = false;
        }
        if fcw_check(&self.params, &frame.radar, &frame.car) {
            alerts.push(Alert { kind: AlertKind::Fcw, t });
        }

        let output = if self.engaged {
            let accel_cmd = acc_step(&self.params, &frame.radar, &frame.car);
            let (steer_torque, saturated) = lkas_step(&self.params, &frame.vision, &frame.car);
            if saturated {
                alerts.push(Alert { kind: AlertKind::SteerSaturated, t });
            }
            ControlOutput {
                accel_cmd,
                steer_torque,
                engaged: true,
            }
        } else {
            ControlOutput::disengaged()
        };

        for a in &alerts {
            self.first[a.kind.index()].get_or_insert(a.t);
        }
        (output, alerts)
    }
}
