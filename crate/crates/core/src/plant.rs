//! Ground-truth kinematics of the host vehicle and the scripted lead vehicle.
//!
//! Lateral sign convention: `lat_offset` is positive to the right of the lane
//! center, while `heading` and `steer_angle` are positive to the left
//! (counter-clockwise). A positive steer therefore drives `lat_offset` down.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MPH_TO_MPS: f64 = 0.44704;

#[inline]
pub fn mph_to_mps(mph: f64) -> f64 {
    mph * MPH_TO_MPS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::S1,
        ScenarioId::S2,
        ScenarioId::S3,
        ScenarioId::S4,
        ScenarioId::S5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::S1 => "S1",
            ScenarioId::S2 => "S2",
            ScenarioId::S3 => "S3",
            ScenarioId::S4 => "S4",
            ScenarioId::S5 => "S5",
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" => Ok(ScenarioId::S1),
            "S2" => Ok(ScenarioId::S2),
            "S3" => Ok(ScenarioId::S3),
            "S4" => Ok(ScenarioId::S4),
            "S5" => Ok(ScenarioId::S5),
            other => Err(Error::Config(format!("unknown scenario id `{other}`"))),
        }
    }
}

/// Ground-truth state of the host and lead vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WorldState<T> {
    pub t: T,
    pub host_pos: T,
    pub host_speed: T,
    pub host_accel: T,
    pub lat_offset: T,
    pub heading: T,
    pub steer_angle: T,
    pub lead_present: bool,
    pub lead_pos: T,
    pub lead_speed: T,
    pub lane_half_width: T,
}

impl<T: Scalar> WorldState<T> {
    /// Bumper-to-bumper distance to the lead, if there is one.
    pub fn relative_distance(&self) -> Option<T> {
        self.lead_present.then(|| self.lead_pos - self.host_pos)
    }

    /// `lead_speed - host_speed`; negative while closing.
    pub fn relative_velocity(&self) -> Option<T> {
        self.lead_present.then(|| self.lead_speed - self.host_speed)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.host_pos,
            self.host_speed,
            self.host_accel,
            self.lat_offset,
            self.heading,
            self.steer_angle,
            self.lead_pos,
            self.lead_speed,
            self.lane_half_width,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Actuator limits and geometry of the host vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub accel_min: f64,
    pub accel_max: f64,
    /// Steering-wheel rate at full torque, rad/s.
    pub steer_rate_gain: f64,
    /// Steering-wheel angle limit, rad.
    pub max_steer: f64,
    pub wheelbase: f64,
    /// Steering-wheel angle over road-wheel angle.
    pub steer_ratio: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            accel_min: -8.0,
            accel_max: 3.0,
            steer_rate_gain: 0.5,
            max_steer: 45f64.to_radians(),
            wheelbase: 2.7,
            steer_ratio: 15.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.accel_min < 0.0
            && self.accel_max > 0.0
            && self.steer_rate_gain > 0.0
            && self.max_steer > 0.0
            && self.wheelbase > 0.0
            && self.steer_ratio > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid vehicle parameters: {self:?}")))
        }
    }
}

/// Advances the host vehicle by one tick.
///
/// Speed, steer angle and heading are updated first and the new values are
/// used to integrate position (semi-implicit Euler).
pub fn step_host<T: Scalar>(
    state: &WorldState<T>,
    accel_cmd: T,
    steer_torque: T,
    dt: T,
    params: &VehicleParams,
) -> Result<WorldState<T>> {
    if !accel_cmd.is_finite() || !steer_torque.is_finite() || !dt.is_finite() {
        return Err(Error::NonFinite("host step input"));
    }
    if dt <= T::zero() {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if steer_torque.abs() > T::one() {
        return Err(Error::InvalidInput(format!(
            "steer torque {steer_torque} outside [-1, 1]"
        )));
    }

    let accel = accel_cmd.clamp_to(T::lit(params.accel_min), T::lit(params.accel_max));
    let speed = (state.host_speed + accel * dt).max(T::zero());

    let max_steer = T::lit(params.max_steer);
    let steer = (state.steer_angle + T::lit(params.steer_rate_gain) * steer_torque * dt)
        .clamp_to(-max_steer, max_steer);
    let road_wheel = steer / T::lit(params.steer_ratio);
    let heading = state.heading + speed * road_wheel.tan() / T::lit(params.wheelbase) * dt;

    let next = WorldState {
        t: state.t + dt,
        host_pos: state.host_pos + speed * heading.cos() * dt,
        host_speed: speed,
        host_accel: accel,
        lat_offset: state.lat_offset - speed * heading.sin() * dt,
        heading,
        steer_angle: steer,
        ..*state
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite("host state"))
    }
}

/// One piece of a lead speed schedule: from `start` on, move toward
/// `target_speed` at `accel` (magnitude).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSegment {
    pub start: f64,
    pub target_speed: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadProfile {
    pub scenario: ScenarioId,
    pub segments: Vec<SpeedSegment>,
}

impl LeadProfile {
    pub fn new(scenario: ScenarioId, segments: Vec<SpeedSegment>) -> Result<Self> {
        let profile = Self { scenario, segments };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(format!("{} profile: {msg}", self.scenario)));
        let Some(first) = self.segments.first() else {
            return fail("empty schedule");
        };
        if first.start != 0.0 {
            return fail("first segment must start at t = 0");
        }
        for seg in &self.segments {
            if !(seg.start.is_finite() && seg.target_speed.is_finite() && seg.accel.is_finite()) {
                return fail("non-finite segment");
            }
            if seg.target_speed < 0.0 || seg.accel < 0.0 {
                return fail("negative target speed or accel");
            }
        }
        if self.segments.windows(2).any(|w| w[1].start <= w[0].start) {
            return fail("segments must be strictly time-ordered");
        }
        Ok(())
    }

    pub fn initial_speed(&self) -> f64 {
        self.segments[0].target_speed
    }

    pub fn active_segment(&self, t: f64) -> &SpeedSegment {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start <= t)
            .unwrap_or(&self.segments[0])
    }

    /// Default schedules for the five scenarios. Speeds follow the scenario
    /// descriptions; accelerations and switch times are implementer-chosen.
    pub fn default_for(scenario: ScenarioId) -> Self {
        let seg = |start: f64, mph: f64, accel: f64| SpeedSegment {
            start,
            target_speed: mph_to_mps(mph),
            accel,
        };
        let segments = match scenario {
            ScenarioId::S1 => vec![seg(0.0, 40.0, 0.0)],
            ScenarioId::S2 => vec![seg(0.0, 25.0, 0.0)],
            ScenarioId::S3 => vec![seg(0.0, 40.0, 0.0), seg(5.0, 60.0, 1.0), seg(15.0, 30.0, 1.5)],
            ScenarioId::S4 => vec![seg(0.0, 40.0, 0.0), seg(5.0, 20.0, 1.5), seg(15.0, 50.0, 1.0)],
            ScenarioId::S5 => vec![seg(0.0, 40.0, 0.0), seg(8.0, 0.0, 2.0)],
        };
        Self { scenario, segments }
    }
}

/// Advances the lead vehicle; returns the new speed and the position delta.
pub fn step_lead<T: Scalar>(profile: &LeadProfile, lead_speed: T, t: T, dt: T) -> (T, T) {
    let seg = profile.active_segment(t.as_f64());
    let target = T::lit(seg.target_speed);
    let dv = T::lit(seg.accel) * dt;
    let speed = if lead_speed < target {
        (lead_speed + dv).min(target)
    } else {
        (lead_speed - dv).max(target)
    }
    .max(T::zero());
    (speed, speed * dt)
}

/// Initial conditions shared by every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConditions {
    pub host_speed_mph: f64,
    pub relative_distance: f64,
    pub lane_half_width: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self {
            host_speed_mph: 60.0,
            relative_distance: 50.0,
            lane_half_width: 1.85,
        }
    }
}

pub fn init_run<T: Scalar>(profile: &LeadProfile, init: &InitialConditions) -> Result<WorldState<T>> {
    profile.validate()?;
    if init.relative_distance < 0.0 || init.lane_half_width <= 0.0 || init.host_speed_mph < 0.0 {
        return Err(Error::Config(format!("invalid initial conditions: {init:?}")));
    }
    Ok(WorldState {
        t: T::zero(),
        host_pos: T::zero(),
        host_speed: T::lit(mph_to_mps(init.host_speed_mph)),
        host_accel: T::zero(),
        lat_offset: T::zero(),
        heading: T::zero(),
        steer_angle: T::zero(),
        lead_present: true,
        lead_pos: T::lit(init.relative_distance),
        lead_speed: T::lit(profile.initial_speed()),
        lane_half_width: T::lit(init.lane_half_width),
    })
}
