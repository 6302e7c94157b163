use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::config::{CampaignConfig, VisionMode};
use crate::campaign::generate::{derive_seed, noise_seed, Experiment};
use crate::controller::{Alert, AlertKind, AlertManager, ControlOutput};
use crate::error::{Error, Result};
use crate::fault::{apply_fault, eval_trigger, ContextObservables, FaultModel, FaultState, FaultTarget, TriggerMode};
use crate::hazard::{HazardEvent, HazardMonitor};
use crate::plant::{init_run, mph_to_mps, step_host, step_lead, LeadProfile, ScenarioId, WorldState};
use crate::sensors::{sense_car, sense_radar, sense_vision, LaneMeasurement, SensorFrame, VisionHold};
use crate::vision::{detect_lanes, perturb, render_base, row_shifts, shear_translate, Image};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub world: WorldState<f64>,
    pub frame: SensorFrame<f64>,
    pub output: ControlOutput<f64>,
    pub fault_active: bool,
    pub alerts: Vec<AlertKind>,
}

/// Outcome of one experiment; the unit every report and metric is built on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: usize,
    pub mode: TriggerMode,
    pub scenario: ScenarioId,
    pub entry: String,
    pub target: FaultTarget,
    pub fault_type: String,
    pub valid: bool,
    pub invalid_reason: Option<String>,
    pub activation_t: Option<f64>,
    pub manifestation_t: Option<f64>,
    /// First occurrence per hazard kind, in kind order.
    pub hazards: Vec<HazardEvent<f64>>,
    pub collision_t: Option<f64>,
    /// First occurrence per alert kind, in kind order.
    pub alerts: Vec<Alert<f64>>,
    pub end_t: f64,
}

impl RunRecord {
    pub fn activated(&self) -> bool {
        self.activation_t.is_some()
    }

    pub fn manifested(&self) -> bool {
        self.manifestation_t.is_some()
    }

    /// A hazard counts against the fault only once outputs have deviated
    /// from the fault-free twin.
    pub fn hazardous(&self) -> bool {
        self.manifested() && !self.hazards.is_empty()
    }

    pub fn first_hazard_t(&self) -> Option<f64> {
        self.hazards.iter().map(|h| h.t).min_by(f64::total_cmp)
    }

    pub fn first_alert_t(&self) -> Option<f64> {
        self.alerts.iter().map(|a| a.t).min_by(f64::total_cmp)
    }

    /// First hazard minus first alert, when the alert came strictly first.
    pub fn reaction_time(&self) -> Option<f64> {
        if !self.hazardous() {
            return None;
        }
        match (self.first_alert_t(), self.first_hazard_t()) {
            (Some(ta), Some(th)) if ta < th => Some(th - ta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub record: RunRecord,
    /// Empty unless tick recording is enabled.
    pub ticks: Vec<TickRecord>,
}

/// Fault-free reference execution of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinTrace {
    pub scenario: ScenarioId,
    pub pipeline: bool,
    pub worlds: Vec<WorldState<f64>>,
    pub outputs: Vec<ControlOutput<f64>>,
    /// Detector result on vision update ticks (pipeline twins only).
    pub lanes: Vec<Option<Option<LaneMeasurement>>>,
    pub hazards: Vec<HazardEvent<f64>>,
    pub alerts: Vec<Alert<f64>>,
}

pub fn uses_pipeline(cfg: &CampaignConfig, model: &FaultModel) -> bool {
    match cfg.campaign.vision_mode {
        VisionMode::Analytic => false,
        VisionMode::Pipeline => true,
        VisionMode::Auto => matches!(model, FaultModel::VisionImageEffect { .. }),
    }
}

/// Lane detector over one source image. The view only depends on the
/// per-row column shifts, so results are memoized on them.
struct Camera<'a> {
    img: Image,
    cfg: &'a CampaignConfig,
    seen: HashMap<Vec<i64>, Option<LaneMeasurement>>,
}

impl<'a> Camera<'a> {
    fn new(img: Image, cfg: &'a CampaignConfig) -> Self {
        Self { img, cfg, seen: HashMap::new() }
    }

    fn detect(&mut self, world: &WorldState<f64>) -> Option<LaneMeasurement> {
        let shifts = row_shifts(world.lat_offset, world.heading, &self.cfg.render);
        if let Some(m) = self.seen.get(&shifts) {
            return *m;
        }
        let frame = shear_translate(&self.img, &shifts);
        let m = detect_lanes(&frame, &self.cfg.render, &self.cfg.detector).ok();
        self.seen.insert(shifts, m);
        m
    }
}

/// Clean frame of the configured road; the per-tick view is this image
/// sheared by the host pose.
pub fn base_frame(cfg: &CampaignConfig) -> Image {
    render_base(cfg.initial.lane_half_width, &cfg.render)
}

struct Loop<'a> {
    cfg: &'a CampaignConfig,
    profile: LeadProfile,
    dt: f64,
    n_ticks: usize,
    cruise: f64,
}

impl<'a> Loop<'a> {
    fn new(cfg: &'a CampaignConfig, scenario: ScenarioId) -> Self {
        Self {
            cfg,
            profile: cfg.lead_profile(scenario),
            dt: cfg.campaign.dt,
            n_ticks: cfg.n_ticks(),
            cruise: mph_to_mps(cfg.sensors.cruise_set_mph),
        }
    }

    fn advance(&self, world: &WorldState<f64>, out: &ControlOutput<f64>, tick: usize) -> Result<WorldState<f64>> {
        let mut next = step_host(world, out.accel_cmd, out.steer_torque, self.dt, &self.cfg.vehicle)?;
        let (lead_speed, dx) = step_lead(&self.profile, world.lead_speed, world.t, self.dt);
        next.lead_speed = lead_speed;
        next.lead_pos = world.lead_pos + dx;
        next.t = (tick + 1) as f64 * self.dt;
        if next.is_finite() {
            Ok(next)
        } else {
            Err(Error::NonFinite("world state"))
        }
    }
}

pub fn run_twin(cfg: &CampaignConfig, scenario: ScenarioId, pipeline: bool) -> Result<TwinTrace> {
    let lp = Loop::new(cfg, scenario);
    let sensors = &cfg.sensors;
    let mut camera = pipeline.then(|| Camera::new(base_frame(cfg), cfg));
    let mut world: WorldState<f64> = init_run(&lp.profile, &cfg.initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(cfg.campaign.seed, scenario));
    let mut hold = VisionHold::new(sensors.vision_period);
    let mut mgr = AlertManager::new(cfg.controller);
    let mut monitor = HazardMonitor::new(cfg.hazards);
    let mut trace = TwinTrace {
        scenario,
        pipeline,
        worlds: Vec::with_capacity(lp.n_ticks + 1),
        outputs: Vec::with_capacity(lp.n_ticks),
        lanes: Vec::with_capacity(lp.n_ticks),
        hazards: Vec::new(),
        alerts: Vec::new(),
    };
    for k in 0..=lp.n_ticks {
        monitor.observe(&world);
        trace.worlds.push(world);
        if monitor.collision().is_some() || k == lp.n_ticks {
            break;
        }
        let t = k as f64 * lp.dt;
        let radar = sense_radar(&world, sensors, &mut rng);
        let mut lane = None;
        let (vision, fresh) = hold.sample(k, || {
            let m = camera.as_mut().map(|cam| {
                let m = cam.detect(&world);
                lane = Some(m);
                m
            });
            sense_vision(&world, m, sensors, &mut rng)
        });
        let frame = SensorFrame {
            radar,
            vision,
            car: sense_car(&world, lp.cruise),
            vision_fresh: fresh,
        };
        let (out, _) = mgr.step(&frame, t);
        trace.outputs.push(out);
        trace.lanes.push(lane);
        world = lp.advance(&world, &out, k)?;
    }
    trace.hazards = monitor.events();
    trace.alerts = mgr.first_alerts();
    Ok(trace)
}

/// Runs one experiment in lockstep with its fault-free twin.
pub fn run_experiment(cfg: &CampaignConfig, exp: &Experiment, twin: &TwinTrace) -> Result<RunLog> {
    let spec = &exp.fault;
    let pipeline = uses_pipeline(cfg, &spec.model);
    if twin.scenario != exp.scenario || twin.pipeline != pipeline {
        return Err(Error::InvalidInput(format!("twin does not match experiment {}", exp.id)));
    }
    let lp = Loop::new(cfg, exp.scenario);
    let sensors = &cfg.sensors;
    let c = &cfg.campaign;

    let clean = pipeline.then(|| base_frame(cfg));
    let mut perturbed = match (&clean, &spec.model) {
        (Some(img), FaultModel::VisionImageEffect { effect }) => {
            Some(Camera::new(perturb(img, effect, derive_seed(exp.seed, 1)), cfg))
        }
        _ => None,
    };
    let mut clean = clean.map(|img| Camera::new(img, cfg));

    let mut world: WorldState<f64> = init_run(&lp.profile, &cfg.initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(c.seed, exp.scenario));
    let mut hold = VisionHold::new(sensors.vision_period);
    let mut mgr = AlertManager::new(cfg.controller);
    let mut monitor = HazardMonitor::new(cfg.hazards);
    let mut fstate = FaultState::new(spec);
    let mut manifestation_t = None;
    let mut invalid_reason = None;
    let mut ticks = Vec::new();

    for k in 0..=lp.n_ticks {
        monitor.observe(&world);
        if monitor.collision().is_some() || k == lp.n_ticks {
            break;
        }
        let t = k as f64 * lp.dt;
        let obs = ContextObservables::from_world(&world, c.min_context_speed);
        let active = eval_trigger(&spec.trigger, obs.as_ref(), t);
        fstate.record_activation(spec, active, t);

        let radar = sense_radar(&world, sensors, &mut rng);
        let (vision, fresh) = hold.sample(k, || {
            let m = clean.as_mut().map(|clean| match (perturbed.as_mut(), active) {
                (Some(cam), true) => cam.detect(&world),
                _ => match (twin.worlds.get(k), twin.lanes.get(k)) {
                    (Some(w), Some(Some(m))) if *w == world => *m,
                    _ => clean.detect(&world),
                },
            });
            sense_vision(&world, m, sensors, &mut rng)
        });
        let frame = SensorFrame {
            radar,
            vision,
            car: sense_car(&world, lp.cruise),
            vision_fresh: fresh,
        };
        let faulted = apply_fault(&frame, spec, active, &mut fstate);
        let (out, alerts) = mgr.step(&faulted, t);

        if fstate.activation().is_some() && manifestation_t.is_none() {
            if let Some(reference) = twin.outputs.get(k) {
                let deviates = (out.accel_cmd - reference.accel_cmd).abs() > c.manifest_eps_accel
                    || (out.steer_torque - reference.steer_torque).abs() > c.manifest_eps_torque;
                if deviates {
                    manifestation_t = Some(t);
                }
            }
        }
        if c.record_ticks {
            ticks.push(TickRecord {
                t,
                world,
                frame: faulted,
                output: out,
                fault_active: active,
                alerts: alerts.iter().map(|a| a.kind).collect(),
            });
        }
        match lp.advance(&world, &out, k) {
            Ok(next) => world = next,
            Err(e) => {
                invalid_reason = Some(e.to_string());
                break;
            }
        }
    }

    let record = RunRecord {
        id: exp.id,
        mode: spec.trigger.mode(),
        scenario: exp.scenario,
        entry: exp.entry.clone(),
        target: spec.model.target(),
        fault_type: spec.model.type_label(),
        valid: invalid_reason.is_none(),
        invalid_reason,
        activation_t: fstate.activation().map(|a| a.t),
        manifestation_t,
        hazards: monitor.events(),
        collision_t: monitor.collision(),
        alerts: mgr.first_alerts(),
        end_t: world.t,
    };
    Ok(RunLog { record, ticks })
}

/// Runs every experiment on `workers` threads. Output is ordered by id and
/// does not depend on the worker count.
pub fn run_campaign(cfg: &CampaignConfig, experiments: &[Experiment], workers: usize) -> Result<Vec<RunLog>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut keys: Vec<(ScenarioId, bool)> = experiments
        .iter()
        .map(|e| (e.scenario, uses_pipeline(cfg, &e.fault.model)))
        .collect();
    keys.sort();
    keys.dedup();
    pool.install(|| {
        let twins: HashMap<(ScenarioId, bool), TwinTrace> = keys
            .par_iter()
            .map(|&(s, p)| run_twin(cfg, s, p).map(|t| ((s, p), t)))
            .collect::<Result<_>>()?;
        let mut logs = experiments
            .par_iter()
            .map(|e| run_experiment(cfg, e, &twins[&(e.scenario, uses_pipeline(cfg, &e.fault.model))]))
            .collect::<Result<Vec<_>>>()?;
        logs.sort_by_key(|l| l.record.id);
        Ok(logs)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::generate::generate_campaign;
    use crate::fault::{FaultSpec, HwtBucket, RsBucket, TriggerSpec};

    fn experiment(model: FaultModel, trigger: TriggerSpec, scenario: ScenarioId) -> Experiment {
        Experiment {
            id: 0,
            scenario,
            entry: "test".into(),
            repetition: 0,
            fault: FaultSpec { model, trigger, seed: 17 },
            seed: 17,
        }
    }

    #[test]
    fn never_active_fault_matches_twin() {
        let cfg = CampaignConfig::default();
        let twin = run_twin(&cfg, ScenarioId::S1, false).unwrap();
        let exp = experiment(FaultModel::RadarJam, TriggerSpec::Random { t_start: 1e9 }, ScenarioId::S1);
        let log = run_experiment(&cfg, &exp, &twin).unwrap();
        assert!(!log.record.activated());
        assert!(!log.record.manifested());
        assert!(log.record.hazards.is_empty() && log.record.alerts.is_empty());
        assert_eq!(log.record.end_t, cfg.campaign.duration);
    }

    #[test]
    fn jam_manifests_on_trigger_tick() {
        let cfg = CampaignConfig::default();
        let twin = run_twin(&cfg, ScenarioId::S2, false).unwrap();
        let exp = experiment(FaultModel::RadarJam, TriggerSpec::Random { t_start: 12.0 }, ScenarioId::S2);
        let r = run_experiment(&cfg, &exp, &twin).unwrap().record;
        assert_eq!(r.activation_t, Some(12.0));
        assert_eq!(r.manifestation_t, Some(12.0));
        assert_eq!(r.alerts[0].kind, AlertKind::CanError);
        assert_eq!(r.alerts[0].t, 12.0);
    }

    #[test]
    fn vision_distance_never_manifests() {
        let cfg = CampaignConfig::default();
        let twin = run_twin(&cfg, ScenarioId::S3, false).unwrap();
        let trig = TriggerSpec::Guided { hwt: HwtBucket::Le, rs: RsBucket::Gt0, safe_hwt: 2.5 };
        let exp = experiment(FaultModel::VisionDRel { d_range: 20.0 }, trig, ScenarioId::S3);
        let r = run_experiment(&cfg, &exp, &twin).unwrap().record;
        assert!(r.activated());
        assert!(!r.manifested());
        assert!(!r.hazardous());
    }

    #[test]
    fn ticks_recorded_on_request() {
        let mut cfg = CampaignConfig::default();
        cfg.campaign.record_ticks = true;
        cfg.campaign.duration = 1.0;
        let twin = run_twin(&cfg, ScenarioId::S1, false).unwrap();
        let exp = experiment(FaultModel::RadarJam, TriggerSpec::Random { t_start: 0.5 }, ScenarioId::S1);
        let log = run_experiment(&cfg, &exp, &twin).unwrap();
        assert_eq!(log.ticks.len(), 100);
        for (k, tick) in log.ticks.iter().enumerate() {
            assert_eq!(tick.t, k as f64 * 0.01);
            assert_eq!(tick.world.t, tick.t);
            assert_eq!(tick.fault_active, tick.t >= 0.5);
        }
    }

    #[test]
    fn reaction_time_needs_alert_first() {
        let mut r = RunRecord {
            id: 0,
            mode: TriggerMode::Random,
            scenario: ScenarioId::S1,
            entry: "x".into(),
            target: FaultTarget::RadarJam,
            fault_type: "RadarJam".into(),
            valid: true,
            invalid_reason: None,
            activation_t: Some(1.0),
            manifestation_t: Some(1.0),
            hazards: vec![HazardEvent { kind: crate::hazard::HazardKind::H1, t: 7.71 }],
            collision_t: None,
            alerts: vec![Alert { kind: AlertKind::Fcw, t: 5.0 }],
            end_t: 30.0,
        };
        assert!((r.reaction_time().unwrap() - 2.71).abs() < 1e-12);
        r.alerts[0].t = 7.71;
        assert_eq!(r.reaction_time(), None);
        r.alerts.clear();
        assert_eq!(r.reaction_time(), None);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = CampaignConfig::default();
        cfg.campaign.duration = 3.0;
        cfg.campaign.scenarios = vec![ScenarioId::S1, ScenarioId::S4];
        cfg.library.retain(|e| !matches!(e.model, FaultModel::VisionImageEffect { .. }));
        let exps = generate_campaign(&cfg).unwrap();
        let a = run_campaign(&cfg, &exps, 1).unwrap();
        let b = run_campaign(&cfg, &exps, 3).unwrap();
        assert_eq!(a, b);
    }
}
