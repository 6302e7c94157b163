use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault::context::TriggerSpec;
use crate::scalar::Scalar;
use crate::sensors::{SensorFrame, Track};
use crate::vision::EffectParams;

/// Smallest relative distance a corrupted reading may report, m.
pub const MIN_FAULTED_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultTarget {
    RadarChaff,
    RadarInvisible,
    RadarGhost,
    RadarJam,
    CarSpeed,
    CarSteer,
    VisionPathModel,
    VisionCameraUnavailable,
    VisionDRel,
    RadarAndVisionDRel,
    VisionImageEffect,
}

impl FaultTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultTarget::RadarChaff => "RadarChaff",
            FaultTarget::RadarInvisible => "RadarInvisible",
            FaultTarget::RadarGhost => "RadarGhost",
            FaultTarget::RadarJam => "RadarJam",
            FaultTarget::CarSpeed => "CarSpeed",
            FaultTarget::CarSteer => "CarSteer",
            FaultTarget::VisionPathModel => "VisionPathModel",
            FaultTarget::VisionCameraUnavailable => "VisionCameraUnavailable",
            FaultTarget::VisionDRel => "VisionDRel",
            FaultTarget::RadarAndVisionDRel => "RadarAndVisionDRel",
            FaultTarget::VisionImageEffect => "VisionImageEffect",
        }
    }
}

impl std::str::FromStr for FaultTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use FaultTarget::*;
        [
            RadarChaff,
            RadarInvisible,
            RadarGhost,
            RadarJam,
            CarSpeed,
            CarSteer,
            VisionPathModel,
            VisionCameraUnavailable,
            VisionDRel,
            RadarAndVisionDRel,
            VisionImageEffect,
        ]
        .into_iter()
        .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| Error::Config(format!("unknown fault target `{s}`")))
    }
}

fn default_chaff_d() -> f64 {
    20.0
}
fn default_chaff_v() -> f64 {
    10.0
}
fn default_ghost_d() -> f64 {
    10.0
}
fn default_ghost_v() -> f64 {
    -5.0
}
fn default_steer_range() -> f64 {
    45f64.to_radians()
}
fn default_path_range() -> f64 {
    10.0
}

/// What to corrupt and with which parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", deny_unknown_fields)]
pub enum FaultModel {
    RadarChaff {
        #[serde(default = "default_chaff_d")]
        d_range: f64,
        #[serde(default = "default_chaff_v")]
        v_range: f64,
    },
    RadarInvisible,
    RadarGhost {
        #[serde(default = "default_ghost_d")]
        d_ghost: f64,
        #[serde(default = "default_ghost_v")]
        v_ghost: f64,
    },
    RadarJam,
    /// Additive speed error redrawn every tick; `None` means twice the cruise
    /// set-point, so the reported speed spans `[0, 2 * cruise]`.
    CarSpeed {
        #[serde(default)]
        offset_range: Option<f64>,
    },
    /// Additive steer-angle error drawn once per run.
    CarSteer {
        #[serde(default = "default_steer_range")]
        offset_range: f64,
    },
    /// Shift of the detected lane geometry, redrawn every vision update.
    VisionPathModel {
        #[serde(default = "default_path_range")]
        offset_range: f64,
    },
    VisionCameraUnavailable,
    VisionDRel {
        #[serde(default = "default_chaff_d")]
        d_range: f64,
    },
    RadarAndVisionDRel {
        #[serde(default = "default_chaff_d")]
        d_range: f64,
    },
    VisionImageEffect { effect: EffectParams },
}

impl FaultModel {
    pub fn target(&self) -> FaultTarget {
        match self {
            FaultModel::RadarChaff { .. } => FaultTarget::RadarChaff,
            FaultModel::RadarInvisible => FaultTarget::RadarInvisible,
            FaultModel::RadarGhost { .. } => FaultTarget::RadarGhost,
            FaultModel::RadarJam => FaultTarget::RadarJam,
            FaultModel::CarSpeed { .. } => FaultTarget::CarSpeed,
            FaultModel::CarSteer { .. } => FaultTarget::CarSteer,
            FaultModel::VisionPathModel { .. } => FaultTarget::VisionPathModel,
            FaultModel::VisionCameraUnavailable => FaultTarget::VisionCameraUnavailable,
            FaultModel::VisionDRel { .. } => FaultTarget::VisionDRel,
            FaultModel::RadarAndVisionDRel { .. } => FaultTarget::RadarAndVisionDRel,
            FaultModel::VisionImageEffect { .. } => FaultTarget::VisionImageEffect,
        }
    }

    /// Label used in per-fault-type tables; image effects are split by effect.
    pub fn type_label(&self) -> String {
        match self {
            FaultModel::VisionImageEffect { effect } => format!("Image{}", effect.kind().as_str()),
            other => other.target().as_str().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{}: {name} must be positive, got {v}", self.target().as_str())))
            }
        };
        match *self {
            FaultModel::RadarChaff { d_range, v_range } => {
                positive("d_range", d_range)?;
                positive("v_range", v_range)
            }
            FaultModel::RadarGhost { d_ghost, v_ghost } => {
                positive("d_ghost", d_ghost)?;
                if v_ghost.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config("RadarGhost: v_ghost must be finite".into()))
                }
            }
            FaultModel::CarSpeed { offset_range } => match offset_range {
                Some(r) => positive("offset_range", r),
                None => Ok(()),
            },
            FaultModel::CarSteer { offset_range } => {
                positive("offset_range", offset_range)?;
                if offset_range > default_steer_range() + 1e-12 {
                    return Err(Error::Config("CarSteer: offset_range exceeds 45 degrees".into()));
                }
                Ok(())
            }
            FaultModel::VisionPathModel { offset_range } => positive("offset_range", offset_range),
            FaultModel::VisionDRel { d_range } | FaultModel::RadarAndVisionDRel { d_range } => {
                positive("d_range", d_range)
            }
            FaultModel::VisionImageEffect { ref effect } => effect.validate(),
            FaultModel::RadarInvisible | FaultModel::RadarJam | FaultModel::VisionCameraUnavailable => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub model: FaultModel,
    pub trigger: TriggerSpec,
    /// Determines every random draw made for this fault.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ActivationEvent<T> {
    pub target: FaultTarget,
    pub t: T,
}

/// Mutable per-run fault state: random stream, per-run draws and the
/// activation stamp.
#[derive(Debug, Clone)]
pub struct FaultState<T> {
    rng: ChaCha8Rng,
    steer_offset: f64,
    path_offset: Option<f64>,
    activation: Option<ActivationEvent<T>>,
}

impl<T: Scalar> FaultState<T> {
    pub fn new(spec: &FaultSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let steer_offset = match spec.model {
            FaultModel::CarSteer { offset_range } => rng.random_range(-offset_range..=offset_range),
            _ => 0.0,
        };
        Self {
            rng,
            steer_offset,
            path_offset: None,
            activation: None,
        }
    }

    pub fn steer_offset(&self) -> f64 {
        self.steer_offset
    }

    /// Stamps the first tick on which the trigger was active.
    pub fn record_activation(&mut self, spec: &FaultSpec, active: bool, t: T) -> Option<ActivationEvent<T>> {
        if active && self.activation.is_none() {
            let event = ActivationEvent {
                target: spec.model.target(),
                t,
            };
            self.activation = Some(event);
            return Some(event);
        }
        None
    }

    pub fn activation(&self) -> Option<ActivationEvent<T>> {
        self.activation
    }

    fn uniform(&mut self, range: f64) -> T {
        T::lit(self.rng.random_range(-range..=range))
    }
}

fn floor_distance<T: Scalar>(d: T) -> T {
    d.max(T::lit(MIN_FAULTED_DISTANCE))
}

/// Corrupts a sensor frame while the fault is active. An inactive fault
/// returns the frame unchanged and draws nothing.
///
/// Image effects act on the camera frame before lane detection, so the
/// reading-level pass here leaves them untouched.
pub fn apply_fault<T: Scalar>(
    frame: &SensorFrame<T>,
    spec: &FaultSpec,
    active: bool,
    state: &mut FaultState<T>,
) -> SensorFrame<T> {
    let mut out = frame.clone();
    if !active {
        return out;
    }
    match spec.model {
        FaultModel::RadarChaff { d_range, v_range } => {
            for track in out.radar.tracks.iter_mut() {
                track.d_rel = floor_distance(track.d_rel + state.uniform(d_range));
                track.v_rel = track.v_rel + state.uniform(v_range);
            }
        }
        FaultModel::RadarInvisible => out.radar.tracks.clear(),
        FaultModel::RadarGhost { d_ghost, v_ghost } => {
            let ghost = Track {
                d_rel: T::lit(d_ghost),
                v_rel: T::lit(v_ghost),
            };
            if out.radar.tracks.is_full() {
                let farthest = (0..out.radar.tracks.len())
                    .max_by(|&a, &b| {
                        out.radar.tracks[a]
                            .d_rel
                            .partial_cmp(&out.radar.tracks[b].d_rel)
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .expect("full track list is non-empty");
                out.radar.tracks[farthest] = ghost;
            } else {
                out.radar.tracks.push(ghost);
            }
        }
        FaultModel::RadarJam => out.radar.valid = false,
        FaultModel::CarSpeed { offset_range } => {
            let cruise = out.car.cruise_set;
            let range = offset_range.unwrap_or(2.0 * cruise.as_f64());
            let offset = state.uniform(range);
            out.car.speed = (out.car.speed + offset).clamp_to(T::zero(), T::lit(2.0) * cruise);
        }
        FaultModel::CarSteer { .. } => {
            out.car.steer_angle = out.car.steer_angle + T::lit(state.steer_offset);
        }
        FaultModel::VisionPathModel { offset_range } => {
            if frame.vision_fresh || state.path_offset.is_none() {
                state.path_offset = Some(state.rng.random_range(-offset_range..=offset_range));
            }
            let shift = T::lit(state.path_offset.expect("drawn above"));
            if out.vision.valid {
                out.vision.left_lane_x = out.vision.left_lane_x + shift;
                out.vision.right_lane_x = out.vision.right_lane_x + shift;
                out.vision.path_poly[0] = out.vision.path_poly[0] + shift;
            }
        }
        FaultModel::VisionCameraUnavailable => out.vision.valid = false,
        FaultModel::VisionDRel { d_range } => {
            if let Some(d) = out.vision.d_rel_vision {
                out.vision.d_rel_vision = Some(floor_distance(d + state.uniform(d_range)));
            }
        }
        FaultModel::RadarAndVisionDRel { d_range } => {
            for track in out.radar.tracks.iter_mut() {
                track.d_rel = floor_distance(track.d_rel + state.uniform(d_range));
            }
            if let Some(d) = out.vision.d_rel_vision {
                out.vision.d_rel_vision = Some(floor_distance(d + state.uniform(d_range)));
            }
        }
        FaultModel::VisionImageEffect { .. } => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::context::{HwtBucket, RsBucket};
    use crate::sensors::{CarReading, RadarReading, VisionReading};
    use crate::vision::{EffectParams, Effect};
    use arrayvec::ArrayVec;
    use proptest::prelude::*;

    fn frame() -> SensorFrame<f64> {
        let mut tracks = ArrayVec::new();
        tracks.push(Track { d_rel: 50.0, v_rel: -8.94 });
        SensorFrame {
            radar: RadarReading { valid: true, tracks },
            vision: VisionReading {
                valid: true,
                left_lane_x: -1.85,
                right_lane_x: 1.85,
                path_poly: [0.0; 4],
                d_rel_vision: Some(50.0),
            },
            car: CarReading { speed: 26.82, steer_angle: 0.0, cruise_set: 26.82 },
            vision_fresh: true,
        }
    }

    fn spec(model: FaultModel, seed: u64) -> FaultSpec {
        FaultSpec {
            model,
            trigger: TriggerSpec::Guided { hwt: HwtBucket::Le, rs: RsBucket::Gt0, safe_hwt: 2.5 },
            seed,
        }
    }

    fn all_models() -> Vec<FaultModel> {
        vec![
            FaultModel::RadarChaff { d_range: 20.0, v_range: 10.0 },
            FaultModel::RadarInvisible,
            FaultModel::RadarGhost { d_ghost: 10.0, v_ghost: -5.0 },
            FaultModel::RadarJam,
            FaultModel::CarSpeed { offset_range: None },
            FaultModel::CarSteer { offset_range: default_steer_range() },
            FaultModel::VisionPathModel { offset_range: 5.0 },
            FaultModel::VisionCameraUnavailable,
            FaultModel::VisionDRel { d_range: 20.0 },
            FaultModel::RadarAndVisionDRel { d_range: 20.0 },
            FaultModel::VisionImageEffect { effect: EffectParams::new(Effect::Fog { thickness: 5.0 }) },
        ]
    }

    #[test]
    fn jam_invalidates_radar() {
        let s = spec(FaultModel::RadarJam, 1);
        let mut st = FaultState::new(&s);
        let out = apply_fault(&frame(), &s, true, &mut st);
        assert!(!out.radar.valid);
    }

    #[test]
    fn speed_offset_clamped_at_twice_cruise() {
        let s = spec(FaultModel::CarSpeed { offset_range: Some(40.0) }, 3);
        let mut st = FaultState::new(&s);
        let mut f = frame();
        let mut saw_clamp = false;
        for _ in 0..200 {
            let out = apply_fault(&f, &s, true, &mut st);
            assert!((0.0..=2.0 * 26.82).contains(&out.car.speed));
            saw_clamp |= out.car.speed == 2.0 * 26.82;
            f.vision_fresh = false;
        }
        assert!(saw_clamp);
        // the arithmetic of the clamp itself: 26.82 + 40 -> 53.64
        assert_eq!((26.82f64 + 40.0).clamp_to(0.0, 2.0 * 26.82), 53.64);
    }

    #[test]
    fn invisible_ghost_and_camera() {
        let s = spec(FaultModel::RadarInvisible, 1);
        let mut st = FaultState::new(&s);
        let out = apply_fault(&frame(), &s, true, &mut st);
        assert!(out.radar.valid && out.radar.tracks.is_empty());

        let s = spec(FaultModel::RadarGhost { d_ghost: 10.0, v_ghost: -5.0 }, 1);
        let mut st = FaultState::new(&s);
        let mut f = frame();
        f.radar.tracks.clear();
        let out = apply_fault(&f, &s, true, &mut st);
        assert_eq!(out.radar.tracks.as_slice(), &[Track { d_rel: 10.0, v_rel: -5.0 }]);
        let out = apply_fault(&frame(), &s, true, &mut st);
        assert_eq!(out.radar.nearest().unwrap().d_rel, 10.0);

        let s = spec(FaultModel::VisionCameraUnavailable, 1);
        let mut st = FaultState::new(&s);
        assert!(!apply_fault(&frame(), &s, true, &mut st).vision.valid);
    }

    #[test]
    fn vision_distance_leaves_radar_alone() {
        let s = spec(FaultModel::VisionDRel { d_range: 20.0 }, 9);
        let mut st = FaultState::new(&s);
        let out = apply_fault(&frame(), &s, true, &mut st);
        assert_eq!(out.radar, frame().radar);
        assert_ne!(out.vision.d_rel_vision, Some(50.0));

        let s = spec(FaultModel::RadarAndVisionDRel { d_range: 20.0 }, 9);
        let mut st = FaultState::new(&s);
        let out = apply_fault(&frame(), &s, true, &mut st);
        let radar_shift = out.radar.tracks[0].d_rel - 50.0;
        let vision_shift = out.vision.d_rel_vision.unwrap() - 50.0;
        assert_ne!(radar_shift, 0.0);
        assert_ne!(radar_shift, vision_shift);
    }

    #[test]
    fn path_offset_held_between_vision_updates() {
        let s = spec(FaultModel::VisionPathModel { offset_range: 5.0 }, 4);
        let mut st = FaultState::new(&s);
        let mut f = frame();
        let a = apply_fault(&f, &s, true, &mut st).vision.left_lane_x;
        f.vision_fresh = false;
        let b = apply_fault(&f, &s, true, &mut st).vision.left_lane_x;
        assert_eq!(a, b);
        f.vision_fresh = true;
        let c = apply_fault(&f, &s, true, &mut st).vision.left_lane_x;
        assert_ne!(a, c);
        let out = apply_fault(&f, &s, true, &mut st);
        assert!((out.vision.right_lane_x - out.vision.left_lane_x - 3.7).abs() < 1e-12);
    }

    #[test]
    fn steer_offset_fixed_per_run() {
        let s = spec(FaultModel::CarSteer { offset_range: default_steer_range() }, 11);
        let mut st = FaultState::new(&s);
        let offs: Vec<f64> = (0..10)
            .map(|_| apply_fault(&frame(), &s, true, &mut st).car.steer_angle)
            .collect();
        assert!(offs.iter().all(|&o| o == offs[0]));
        assert!(offs[0].abs() <= 45f64.to_radians());
        assert_eq!(FaultState::<f64>::new(&s).steer_offset(), offs[0]);
    }

    #[test]
    fn activation_stamped_once() {
        let s = spec(FaultModel::RadarJam, 1);
        let mut st = FaultState::<f64>::new(&s);
        assert!(st.record_activation(&s, false, 0.5).is_none());
        let ev = st.record_activation(&s, true, 1.0).unwrap();
        assert_eq!(ev.t, 1.0);
        assert!(st.record_activation(&s, true, 2.0).is_none());
        assert_eq!(st.activation().unwrap().t, 1.0);
    }

    #[test]
    fn validation_and_parsing() {
        assert!(FaultModel::CarSteer { offset_range: 1.0 }.validate().is_err());
        assert!(FaultModel::RadarChaff { d_range: -1.0, v_range: 1.0 }.validate().is_err());
        for m in all_models() {
            m.validate().unwrap();
        }
        let parsed: FaultModel = toml::from_str("target = \"RadarChaff\"").unwrap();
        assert_eq!(parsed, FaultModel::RadarChaff { d_range: 20.0, v_range: 10.0 });
        assert!(toml::from_str::<FaultModel>("target = \"RadarLaser\"").is_err());
        assert!("radarjam".parse::<FaultTarget>().is_ok());
        assert!("nope".parse::<FaultTarget>().is_err());
    }

    proptest! {
        #[test]
        fn inactive_is_identity(idx in 0usize..11, seed in any::<u64>(), ticks in 1usize..20) {
            let s = spec(all_models()[idx].clone(), seed);
            let mut st = FaultState::new(&s);
            for k in 0..ticks {
                let mut f = frame();
                f.vision_fresh = k % 5 == 0;
                prop_assert_eq!(apply_fault(&f, &s, false, &mut st), f);
            }
        }

        #[test]
        fn seed_determines_corruption(idx in 0usize..11, seed in any::<u64>()) {
            let s = spec(all_models()[idx].clone(), seed);
            let run = || {
                let mut st = FaultState::new(&s);
                (0..30).map(|k| {
                    let mut f = frame();
                    f.vision_fresh = k % 5 == 0;
                    apply_fault(&f, &s, true, &mut st)
                }).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn corrupted_values_stay_clamped(idx in 0usize..11, seed in any::<u64>(), d in 0.0f64..5.0) {
            let s = spec(all_models()[idx].clone(), seed);
            let mut st = FaultState::new(&s);
            let mut f = frame();
            f.radar.tracks[0].d_rel = d;
            f.vision.d_rel_vision = Some(d);
            for _ in 0..30 {
                let out = apply_fault(&f, &s, true, &mut st);
                prop_assert!(out.car.speed >= 0.0 && out.car.speed <= 2.0 * out.car.cruise_set);
                prop_assert!((out.car.steer_angle - f.car.steer_angle).abs() <= 45f64.to_radians());
                if idx != 2 {
                    for t in &out.radar.tracks {
                        prop_assert!(t.d_rel > 0.0 || t.d_rel == d);
                    }
                }
                if let Some(dv) = out.vision.d_rel_vision {
                    prop_assert!(dv > 0.0 || dv == d);
                }
            }
        }
    }
}
