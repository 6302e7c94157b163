use serde::{Deserialize, Serialize};

use crate::campaign::run::RunRecord;
use crate::error::{Error, Result};
use crate::fault::TriggerMode;
use crate::hazard::HazardKind;

/// `num / den`, with an empty denominator giving 0.
pub fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignMetrics {
    pub injected: usize,
    pub invalid: usize,
    pub activated: usize,
    pub manifested: usize,
    pub sdc: usize,
    /// Runs with at least one hazard after manifestation.
    pub hazards: usize,
    /// Runs per hazard kind, indexed H1, H2, H3.
    pub hazards_by_kind: [usize; 3],
    /// Activated runs that raised at least one alert.
    pub alerts: usize,
    pub hazards_no_alert: usize,
    pub alerts_no_hazard: usize,
    pub hazard_coverage: f64,
    pub reaction_times: Vec<f64>,
    /// Manifestation time minus activation time.
    pub manifestation_times: Vec<f64>,
}

impl CampaignMetrics {
    pub fn activation_rate(&self) -> f64 {
        rate(self.activated, self.injected)
    }

    pub fn manifestation_rate(&self) -> f64 {
        rate(self.manifested, self.activated)
    }

    pub fn alert_rate(&self) -> f64 {
        rate(self.alerts, self.activated)
    }

    pub fn no_alert_fraction(&self) -> f64 {
        rate(self.hazards_no_alert, self.hazards)
    }

    pub fn hazards_of(&self, kind: HazardKind) -> usize {
        self.hazards_by_kind[kind as usize]
    }

    /// Checks the count lattice and the sdc identity.
    pub fn check_identities(&self) -> Result<()> {
        let ok = self.injected >= self.activated
            && self.activated >= self.manifested
            && self.manifested >= self.hazards
            && self.sdc + self.hazards == self.manifested
            && self.hazards_no_alert <= self.hazards
            && self.hazards_by_kind.iter().all(|&h| h <= self.hazards);
        if ok {
            Ok(())
        } else {
            Err(Error::Record(format!("metric identities violated: {self:?}")))
        }
    }
}

/// Folds run records into campaign metrics. Invalid runs are counted apart
/// and excluded from every rate.
pub fn compute_metrics<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> CampaignMetrics {
    let mut m = CampaignMetrics::default();
    for r in records {
        if !r.valid {
            m.invalid += 1;
            continue;
        }
        m.injected += 1;
        let Some(ta) = r.activation_t else {
            continue;
        };
        m.activated += 1;
        let alerted = !r.alerts.is_empty();
        if alerted {
            m.alerts += 1;
        }
        if let Some(tm) = r.manifestation_t {
            m.manifested += 1;
            m.manifestation_times.push(tm - ta);
        }
        if r.hazardous() {
            m.hazards += 1;
            for h in &r.hazards {
                m.hazards_by_kind[h.kind as usize] += 1;
            }
            match r.reaction_time() {
                Some(tr) => m.reaction_times.push(tr),
                None => m.hazards_no_alert += 1,
            }
        } else if alerted {
            m.alerts_no_hazard += 1;
        }
    }
    m.sdc = m.manifested - m.hazards;
    m.hazard_coverage = rate(m.hazards, m.activated);
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub injected: usize,
    pub activated: usize,
    pub activation_rate: f64,
    pub manifestation_rate: f64,
    pub hazard_coverage: f64,
    pub alert_rate: f64,
}

impl From<&CampaignMetrics> for RateSummary {
    fn from(m: &CampaignMetrics) -> Self {
        Self {
            injected: m.injected,
            activated: m.activated,
            activation_rate: m.activation_rate(),
            manifestation_rate: m.manifestation_rate(),
            hazard_coverage: m.hazard_coverage,
            alert_rate: m.alert_rate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub guided: RateSummary,
    pub random: RateSummary,
    pub guided_coverage_ge_random: bool,
}

pub fn compare_guided_random(guided: &CampaignMetrics, random: &CampaignMetrics) -> ComparisonReport {
    ComparisonReport {
        guided: guided.into(),
        random: random.into(),
        guided_coverage_ge_random: guided.hazard_coverage >= random.hazard_coverage,
    }
}

/// Metrics of the records run under one trigger mode.
pub fn metrics_for_mode(records: &[RunRecord], mode: TriggerMode) -> CampaignMetrics {
    compute_metrics(records.iter().filter(|r| r.mode == mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::run::RunRecord;
    use crate::controller::{Alert, AlertKind};
    use crate::fault::FaultTarget;
    use crate::hazard::HazardEvent;
    use crate::plant::ScenarioId;
    use proptest::prelude::*;

    fn record(act: Option<f64>, man: Option<f64>, haz: &[(HazardKind, f64)], alerts: &[f64]) -> RunRecord {
        RunRecord {
            id: 0,
            mode: TriggerMode::Guided,
            scenario: ScenarioId::S1,
            entry: "e".into(),
            target: FaultTarget::RadarChaff,
            fault_type: "RadarChaff".into(),
            valid: true,
            invalid_reason: None,
            activation_t: act,
            manifestation_t: man,
            hazards: haz.iter().map(|&(kind, t)| HazardEvent { kind, t }).collect(),
            collision_t: None,
            alerts: alerts.iter().map(|&t| Alert { kind: AlertKind::Fcw, t }).collect(),
            end_t: 30.0,
        }
    }

    #[test]
    fn coverage_fixed_point() {
        assert!((rate(1316, 3678) * 100.0 - 35.78).abs() < 0.005);
        assert_eq!(rate(0, 0), 0.0);
    }

    #[test]
    fn empty_campaign() {
        let m = compute_metrics(&[] as &[RunRecord]);
        assert_eq!(m, CampaignMetrics::default());
        assert_eq!(m.activation_rate(), 0.0);
        m.check_identities().unwrap();
    }

    #[test]
    fn counts() {
        let recs = vec![
            record(None, None, &[], &[]),
            record(Some(1.0), None, &[], &[]),
            record(Some(1.0), Some(1.5), &[], &[4.0]),
            record(Some(1.0), Some(1.2), &[(HazardKind::H1, 7.71)], &[5.0]),
            record(Some(2.0), Some(2.0), &[(HazardKind::H3, 3.0), (HazardKind::H1, 4.0)], &[]),
        ];
        let m = compute_metrics(&recs);
        assert_eq!((m.injected, m.activated, m.manifested, m.hazards, m.sdc), (5, 4, 3, 2, 1));
        assert_eq!(m.hazards_by_kind, [2, 0, 1]);
        assert_eq!((m.alerts, m.hazards_no_alert, m.alerts_no_hazard), (2, 1, 1));
        assert_eq!(m.hazard_coverage, 0.5);
        assert_eq!(m.reaction_times.len(), 1);
        assert!((m.reaction_times[0] - 2.71).abs() < 1e-12);
        m.check_identities().unwrap();
    }

    #[test]
    fn invalid_runs_excluded() {
        let mut r = record(Some(1.0), Some(1.0), &[(HazardKind::H3, 2.0)], &[]);
        r.valid = false;
        let m = compute_metrics(&[r]);
        assert_eq!((m.invalid, m.injected, m.hazards), (1, 0, 0));
    }

    #[test]
    fn comparison_flag() {
        let g = CampaignMetrics { hazard_coverage: 0.358, ..Default::default() };
        let r = CampaignMetrics { hazard_coverage: 0.290, ..Default::default() };
        assert!(compare_guided_random(&g, &r).guided_coverage_ge_random);
        assert!(!compare_guided_random(&r, &g).guided_coverage_ge_random);
        assert!(compare_guided_random(&g, &g).guided_coverage_ge_random);
    }

    proptest! {
        #[test]
        fn lattice_holds_for_any_records(specs in proptest::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()), 0..40)) {
            let recs: Vec<RunRecord> = specs.iter().map(|&(a, m, h, al)| {
                let act = a.then_some(1.0);
                let man = (a && m).then_some(2.0);
                let haz: Vec<(HazardKind, f64)> = if h { vec![(HazardKind::H3, 3.0)] } else { vec![] };
                let alerts: Vec<f64> = if al { vec![2.5] } else { vec![] };
                record(act, man, &haz, &alerts)
            }).collect();
            let m = compute_metrics(&recs);
            prop_assert!(m.check_identities().is_ok());
            prop_assert_eq!(m.reaction_times.len() + m.hazards_no_alert, m.hazards);
        }
    }
}
