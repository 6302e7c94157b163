use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::campaign::config::CampaignConfig;
use crate::error::Result;
use crate::fault::{FaultSpec, FaultTarget, TriggerMode, TriggerSpec};
use crate::plant::ScenarioId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: usize,
    pub scenario: ScenarioId,
    pub entry: String,
    pub repetition: usize,
    pub fault: FaultSpec,
    pub seed: u64,
}

impl Experiment {
    pub fn mode(&self) -> TriggerMode {
        self.fault.trigger.mode()
    }
}

/// Mixes two words into a well-spread seed.
pub fn derive_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sensor-noise seed shared by every run of a scenario, so the faulted run
/// and its twin see the same noise as every other experiment on that drive.
pub fn noise_seed(campaign_seed: u64, scenario: ScenarioId) -> u64 {
    derive_seed(campaign_seed, 0x5EED_0000 + scenario as u64)
}

/// Expands the library: modes x entries x scenarios x repetitions, in that
/// nesting order. Seeds and random start times come from the campaign seed
/// only, so filtering afterwards never changes an experiment.
pub fn generate_campaign(cfg: &CampaignConfig) -> Result<Vec<Experiment>> {
    cfg.validate()?;
    let c = &cfg.campaign;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut out = Vec::new();
    for &mode in &c.modes {
        for entry in &cfg.library {
            let cell = entry.context.cell()?;
            for &scenario in &c.scenarios {
                for repetition in 0..c.repetitions {
                    let seed = rng.random::<u64>();
                    let trigger = match mode {
                        TriggerMode::Guided => TriggerSpec::Guided {
                            hwt: cell.hwt,
                            rs: cell.rs,
                            safe_hwt: cfg.controller.safe_hwt,
                        },
                        TriggerMode::Random => TriggerSpec::Random {
                            t_start: (rng.random_range(0.0..c.duration) / c.dt).floor() * c.dt,
                        },
                    };
                    out.push(Experiment {
                        id: out.len(),
                        scenario,
                        entry: entry.name.clone(),
                        repetition,
                        fault: FaultSpec {
                            model: entry.model.clone(),
                            trigger,
                            seed,
                        },
                        seed,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Keeps experiments whose scenario and target pass the (optional) filters.
pub fn filter_experiments(
    experiments: Vec<Experiment>,
    scenarios: Option<&[ScenarioId]>,
    targets: Option<&[FaultTarget]>,
) -> Vec<Experiment> {
    experiments
        .into_iter()
        .filter(|e| scenarios.is_none_or(|s| s.contains(&e.scenario)))
        .filter(|e| targets.is_none_or(|t| t.contains(&e.fault.model.target())))
        .collect()
}

/// Experiment counts per scenario, in scenario order.
pub fn per_scenario_counts(experiments: &[Experiment]) -> Vec<(ScenarioId, usize)> {
    ScenarioId::ALL
        .iter()
        .map(|&s| (s, experiments.iter().filter(|e| e.scenario == s).count()))
        .filter(|&(_, n)| n > 0)
        .collect()
}
