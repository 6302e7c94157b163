use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerParams;
use crate::error::{Error, Result};
use crate::fault::{hazardous_cells, ContextCell, ControlAction, FaultModel, HwtBucket, TriggerMode};
use crate::hazard::HazardParams;
use crate::plant::{InitialConditions, LeadProfile, ScenarioId, VehicleParams};
use crate::sensors::SensorParams;
use crate::vision::{BlurKernel, DetectorParams, Effect, EffectParams, RenderParams};

/// Where the LKAS lane positions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisionMode {
    /// Lane positions from road geometry.
    Analytic,
    /// Every run renders frames and runs the detector.
    Pipeline,
    /// Detector only for image-effect faults.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub seed: u64,
    pub repetitions: usize,
    pub scenarios: Vec<ScenarioId>,
    pub modes: Vec<TriggerMode>,
    pub dt: f64,
    pub duration: f64,
    pub vision_mode: VisionMode,
    /// Host speed below which context observables are undefined, m/s.
    pub min_context_speed: f64,
    pub manifest_eps_accel: f64,
    pub manifest_eps_torque: f64,
    /// Keep per-tick records in memory.
    pub record_ticks: bool,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self {
            seed: 2020,
            repetitions: 3,
            scenarios: ScenarioId::ALL.to_vec(),
            modes: vec![TriggerMode::Guided, TriggerMode::Random],
            dt: 0.01,
            duration: 30.0,
            vision_mode: VisionMode::Auto,
            min_context_speed: 0.5,
            manifest_eps_accel: 1e-6,
            manifest_eps_torque: 1e-6,
            record_ticks: false,
        }
    }
}

/// Unsafe control action a guided entry targets. The relative-speed bucket
/// follows from the hazardous cell of the context table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidedContext {
    pub action: ControlAction,
    pub provided: bool,
    pub hwt: HwtBucket,
}

impl GuidedContext {
    pub fn cell(&self) -> Result<ContextCell> {
        let cells: Vec<ContextCell> = hazardous_cells(self.action, self.provided)
            .into_iter()
            .filter(|c| c.hwt == self.hwt)
            .collect();
        match cells.as_slice() {
            [cell] => Ok(*cell),
            _ => Err(Error::Config(format!("no hazardous context for {self:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryEntry {
    pub name: String,
    pub model: FaultModel,
    pub context: GuidedContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub campaign: CampaignSection,
    pub vehicle: VehicleParams,
    pub controller: ControllerParams,
    pub sensors: SensorParams,
    pub hazards: HazardParams,
    pub initial: InitialConditions,
    pub render: RenderParams,
    pub detector: DetectorParams,
    /// Replaces the built-in lead schedule of the listed scenarios.
    pub lead_profiles: Vec<LeadProfile>,
    pub library: Vec<LibraryEntry>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            campaign: CampaignSection::default(),
            vehicle: VehicleParams::default(),
            controller: ControllerParams::default(),
            sensors: SensorParams::default(),
            hazards: HazardParams::default(),
            initial: InitialConditions::default(),
            render: RenderParams {
                height: 120,
                ..RenderParams::default()
            },
            detector: DetectorParams::default(),
            lead_profiles: Vec::new(),
            library: default_library(),
        }
    }
}

fn entry(name: &str, model: FaultModel, action: ControlAction, provided: bool, hwt: HwtBucket) -> LibraryEntry {
    LibraryEntry {
        name: name.to_string(),
        model,
        context: GuidedContext { action, provided, hwt },
    }
}

fn image(name: &str, effect: Effect) -> LibraryEntry {
    steady(name, FaultModel::VisionImageEffect { effect: EffectParams::new(effect) })
}

/// Long steady following: headway above the safe value, not closing.
fn steady(name: &str, model: FaultModel) -> LibraryEntry {
    entry(name, model, ControlAction::Decelerate, true, HwtBucket::Gt)
}

/// The built-in desk library: every fault target once, every image effect
/// once.
pub fn default_library() -> Vec<LibraryEntry> {
    use ControlAction::*;
    use HwtBucket::*;
    vec![
        entry("radar-chaff", FaultModel::RadarChaff { d_range: 20.0, v_range: 10.0 }, Accelerate, true, Le),
        entry("radar-invisible", FaultModel::RadarInvisible, Decelerate, false, Gt),
        entry("radar-ghost", FaultModel::RadarGhost { d_ghost: 10.0, v_ghost: -5.0 }, Decelerate, true, Gt),
        entry("radar-jam", FaultModel::RadarJam, Decelerate, false, Gt),
        entry("car-speed", FaultModel::CarSpeed { offset_range: None }, Accelerate, true, Le),
        steady("car-steer", FaultModel::CarSteer { offset_range: 45f64.to_radians() }),
        steady("vision-path-model", FaultModel::VisionPathModel { offset_range: 10.0 }),
        steady("vision-camera-unavailable", FaultModel::VisionCameraUnavailable),
        entry("vision-d-rel", FaultModel::VisionDRel { d_range: 20.0 }, Accelerate, true, Le),
        entry("radar-vision-d-rel", FaultModel::RadarAndVisionDRel { d_range: 20.0 }, Accelerate, true, Le),
        image("image-rain", Effect::Rain { thickness: 10.0, angle_deg: 75.0 }),
        image("image-fog", Effect::Fog { thickness: 10.0 }),
        image("image-snow", Effect::Snow { thickness: None }),
        image("image-occlusion", Effect::Occlusion { blob_count: 6 }),
        image("image-contrast", Effect::Contrast { gain: None }),
        image("image-brightness", Effect::Brightness { bias: None }),
        image("image-blur", Effect::Blur { kernel: None::<BlurKernel> }),
    ]
}

impl CampaignConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.campaign;
        if !(c.dt.is_finite() && c.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", c.dt)));
        }
        if !(c.duration.is_finite() && c.duration >= c.dt) {
            return Err(Error::Config(format!("duration must cover at least one tick, got {}", c.duration)));
        }
        if c.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !(c.manifest_eps_accel >= 0.0 && c.manifest_eps_torque >= 0.0 && c.min_context_speed >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        if self.sensors.vision_period == 0 {
            return Err(Error::Config("vision_period must be at least 1".into()));
        }
        self.vehicle.validate()?;
        self.render.validate()?;
        self.detector.validate()?;
        for p in &self.lead_profiles {
            p.validate()?;
        }
        let mut names = std::collections::HashSet::new();
        for e in &self.library {
            let plain = |ch: char| ch.is_ascii_alphanumeric() || "-_.".contains(ch);
            if e.name.is_empty() || !e.name.chars().all(plain) {
                return Err(Error::Config(format!(
                    "library entry name `{}` must be non-empty ASCII letters, digits, `-`, `_` or `.`",
                    e.name
                )));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::Config(format!("duplicate library entry `{}`", e.name)));
            }
            e.model
                .validate()
                .map_err(|err| Error::Config(format!("library entry `{}`: {err}", e.name)))?;
            e.context.cell()?;
        }
        Ok(())
    }

    pub fn lead_profile(&self, scenario: ScenarioId) -> LeadProfile {
        self.lead_profiles
            .iter()
            .find(|p| p.scenario == scenario)
            .cloned()
            .unwrap_or_else(|| LeadProfile::default_for(scenario))
    }

    pub fn n_ticks(&self) -> usize {
        (self.campaign.duration / self.campaign.dt).round() as usize
    }
}
