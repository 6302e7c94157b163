//! Controller-visible sensor readings derived from ground truth.

use arrayvec::ArrayVec;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::plant::WorldState;
use crate::scalar::Scalar;

pub const MAX_TRACKS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Track<T> {
    pub d_rel: T,
    /// `lead_speed - host_speed`
    pub v_rel: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RadarReading<T> {
    pub valid: bool,
    pub tracks: ArrayVec<Track<T>, MAX_TRACKS>,
}

impl<T: Scalar> RadarReading<T> {
    /// Track with the smallest relative distance.
    pub fn nearest(&self) -> Option<&Track<T>> {
        self.tracks
            .iter()
            .min_by(|a, b| a.d_rel.partial_cmp(&b.d_rel).unwrap_or(std::cmp::Ordering::Equal))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VisionReading<T> {
    pub valid: bool,
    /// Lateral position of the left marker relative to the camera axis, at
    /// the look-ahead distance.
    pub left_lane_x: T,
    pub right_lane_x: T,
    /// Lane-center path `c0 + c1*x + c2*x^2 + c3*x^3` versus look-ahead `x`.
    pub path_poly: [T; 4],
    pub d_rel_vision: Option<T>,
}

impl<T: Scalar> VisionReading<T> {
    pub fn unavailable() -> Self {
        Self {
            valid: false,
            left_lane_x: T::zero(),
            right_lane_x: T::zero(),
            path_poly: [T::zero(); 4],
            d_rel_vision: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CarReading<T> {
    pub speed: T,
    pub steer_angle: T,
    pub cruise_set: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SensorFrame<T> {
    pub radar: RadarReading<T>,
    pub vision: VisionReading<T>,
    pub car: CarReading<T>,
    /// True on ticks where the vision reading was refreshed.
    pub vision_fresh: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    /// Std-dev of radar distance noise, m (0 = ideal).
    pub radar_sigma_d: f64,
    /// Std-dev of radar relative-speed noise, m/s.
    pub radar_sigma_v: f64,
    /// Std-dev of the camera distance estimate, m.
    pub vision_sigma_d: f64,
    /// Distance ahead at which lane positions are reported, m.
    pub look_ahead: f64,
    /// Control ticks per vision update (100 Hz / 20 Hz).
    pub vision_period: usize,
    pub cruise_set_mph: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            radar_sigma_d: 0.0,
            radar_sigma_v: 0.0,
            vision_sigma_d: 0.0,
            look_ahead: 30.0,
            vision_period: 5,
            cruise_set_mph: 60.0,
        }
    }
}

fn gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> T {
    if sigma > 0.0 {
        T::lit(Normal::new(0.0, sigma).expect("sigma is positive").sample(rng))
    } else {
        T::zero()
    }
}

/// Radar returns for the current state. Noise is drawn only when a sigma is
/// non-zero, so ideal sensing consumes nothing from `rng`.
pub fn sense_radar<T: Scalar, R: Rng + ?Sized>(
    world: &WorldState<T>,
    params: &SensorParams,
    rng: &mut R,
) -> RadarReading<T> {
    let mut tracks = ArrayVec::new();
    if let (Some(d_rel), Some(v_rel)) = (world.relative_distance(), world.relative_velocity()) {
        tracks.push(Track {
            d_rel: d_rel + gaussian(rng, params.radar_sigma_d),
            v_rel: v_rel + gaussian(rng, params.radar_sigma_v),
        });
    }
    RadarReading { valid: true, tracks }
}

/// Lane geometry seen by an ideal camera.
pub fn analytic_lanes<T: Scalar>(world: &WorldState<T>, look_ahead: T) -> (T, T) {
    let center = -world.lat_offset + look_ahead * world.heading.sin();
    (center - world.lane_half_width, center + world.lane_half_width)
}

/// Lane positions supplied by the image pipeline, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneMeasurement {
    pub left_x: f64,
    pub right_x: f64,
}

/// Builds a vision reading. With `pipeline = None` the lanes come from
/// geometry; with `Some(result)` they come from the detector, and a failed
/// detection yields an invalid reading.
pub fn sense_vision<T: Scalar, R: Rng + ?Sized>(
    world: &WorldState<T>,
    pipeline: Option<Option<LaneMeasurement>>,
    params: &SensorParams,
    rng: &mut R,
) -> VisionReading<T> {
    let d_rel_vision = world
        .relative_distance()
        .map(|d| d + gaussian(rng, params.vision_sigma_d));
    let (left, right) = match pipeline {
        None => analytic_lanes(world, T::lit(params.look_ahead)),
        Some(Some(m)) => (T::lit(m.left_x), T::lit(m.right_x)),
        Some(None) => {
            return VisionReading {
                d_rel_vision,
                ..VisionReading::unavailable()
            }
        }
    };
    let two = T::lit(2.0);
    let c1 = match pipeline {
        None => world.heading.sin(),
        Some(_) => T::zero(),
    };
    let c0 = (left + right) / two - c1 * T::lit(params.look_ahead);
    VisionReading {
        valid: true,
        left_lane_x: left,
        right_lane_x: right,
        path_poly: [c0, c1, T::zero(), T::zero()],
        d_rel_vision,
    }
}

pub fn sense_car<T: Scalar>(world: &WorldState<T>, cruise_set: T) -> CarReading<T> {
    CarReading {
        speed: world.host_speed,
        steer_angle: world.steer_angle,
        cruise_set,
    }
}

/// Zero-order hold between vision updates.
#[derive(Debug, Clone)]
pub struct VisionHold<T> {
    period: usize,
    held: Option<VisionReading<T>>,
}

impl<T: Scalar> VisionHold<T> {
    pub fn new(period: usize) -> Self {
        Self {
            period: period.max(1),
            held: None,
        }
    }

    pub fn is_update_tick(&self, tick: usize) -> bool {
        tick % self.period == 0
    }

    /// Returns the held reading, refreshing it with `fresh` on update ticks.
    /// The boolean is true when the reading was refreshed.
    pub fn sample(
        &mut self,
        tick: usize,
        fresh: impl FnOnce() -> VisionReading<T>,
    ) -> (VisionReading<T>, bool) {
        if self.held.is_none() || self.is_update_tick(tick) {
            let reading = fresh();
            self.held = Some(reading.clone());
            (reading, true)
        } else {
            (self.held.clone().expect("hold initialised"), false)
        }
    }
}
