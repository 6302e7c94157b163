use faultlab::campaign::{run_twin, CampaignConfig};
use faultlab::controller::AlertManager;
use faultlab::hazard::HazardMonitor;
use faultlab::plant::{init_run, mph_to_mps, step_host, step_lead, ScenarioId};
use faultlab::sensors::{sense_car, sense_radar, sense_vision, SensorFrame, VisionHold};
use faultlab::{Scalar, WorldState, WorldStateF32};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fault-free closed loop with analytic lanes, in the scalar type `T`.
fn closed_loop<T: Scalar>(cfg: &CampaignConfig, scenario: ScenarioId) -> (Vec<faultlab::plant::WorldState<T>>, usize) {
    let profile = cfg.lead_profile(scenario);
    let dt = T::lit(cfg.campaign.dt);
    let cruise = T::lit(mph_to_mps(cfg.sensors.cruise_set_mph));
    let mut world = init_run::<T>(&profile, &cfg.initial).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hold = VisionHold::new(cfg.sensors.vision_period);
    let mut mgr = AlertManager::new(cfg.controller);
    let mut monitor = HazardMonitor::new(cfg.hazards);
    let mut worlds = vec![world];
    for k in 0..cfg.n_ticks() {
        let t = T::lit(k as f64 * cfg.campaign.dt);
        let radar = sense_radar(&world, &cfg.sensors, &mut rng);
        let (vision, fresh) = hold.sample(k, || sense_vision(&world, None, &cfg.sensors, &mut rng));
        let frame = SensorFrame {
            radar,
            vision,
            car: sense_car(&world, cruise),
            vision_fresh: fresh,
        };
        let (out, _) = mgr.step(&frame, t);
        let mut next = step_host(&world, out.accel_cmd, out.steer_torque, dt, &cfg.vehicle).unwrap();
        let (lead_speed, dx) = step_lead(&profile, world.lead_speed, world.t, dt);
        next.lead_speed = lead_speed;
        next.lead_pos = world.lead_pos + dx;
        next.t = T::lit((k + 1) as f64 * cfg.campaign.dt);
        world = next;
        monitor.observe(&world);
        worlds.push(world);
    }
    (worlds, monitor.events().len())
}

#[test]
fn f32_loop_tracks_f64_loop() {
    let cfg = CampaignConfig::default();
    for s in ScenarioId::ALL {
        let (w64, h64) = closed_loop::<f64>(&cfg, s);
        let (w32, h32) = closed_loop::<f32>(&cfg, s);
        assert_eq!(h64, 0, "{s}");
        assert_eq!(h32, 0, "{s}");
        let (a, b): (&WorldState, &WorldStateF32) = (w64.last().unwrap(), w32.last().unwrap());
        assert!((a.host_speed - b.host_speed as f64).abs() < 0.05, "{s}: {} vs {}", a.host_speed, b.host_speed);
        let gap64 = a.relative_distance().unwrap();
        let gap32 = b.relative_distance().unwrap() as f64;
        assert!((gap64 - gap32).abs() < 0.5, "{s}: {gap64} vs {gap32}");
        assert!((a.lat_offset - b.lat_offset as f64).abs() < 1e-3, "{s}");
    }
}

#[test]
fn analytic_loop_matches_campaign_twin() {
    let mut cfg = CampaignConfig::default();
    cfg.sensors.radar_sigma_d = 0.0;
    cfg.sensors.radar_sigma_v = 0.0;
    cfg.sensors.vision_sigma_d = 0.0;
    let (worlds, _) = closed_loop::<f64>(&cfg, ScenarioId::S3);
    let twin = run_twin(&cfg, ScenarioId::S3, false).unwrap();
    assert_eq!(twin.worlds.len(), worlds.len());
    assert_eq!(twin.worlds.last(), worlds.last());
}

#[test]
fn desk_config_matches_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml");
    let desk = CampaignConfig::load(std::path::Path::new(path)).unwrap();
    let mut expected = CampaignConfig::default();
    expected.campaign.repetitions = 6;
    assert_eq!(desk, expected);
    let again = CampaignConfig::from_toml_str(&desk.to_toml_string().unwrap()).unwrap();
    assert_eq!(again, desk);
}
