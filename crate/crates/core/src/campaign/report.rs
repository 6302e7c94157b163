//! Event log, per-experiment summary and aggregate tables.
//!
//! Every file starts with a version tag line. `events.jsonl` holds one JSON
//! object per experiment with the fields of [`RunRecord`] in declaration
//! order. The CSV tables use the headers [`SUMMARY_HEADER`] and
//! [`AGGREGATE_HEADER`].

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::campaign::metrics::{compare_guided_random, compute_metrics, mean, CampaignMetrics, ComparisonReport};
use crate::campaign::run::RunRecord;
use crate::error::{Error, Result};
use crate::fault::TriggerMode;
use crate::plant::ScenarioId;

pub const EVENTS_TAG: &str = "# faultlab-events v1";
pub const SUMMARY_TAG: &str = "# faultlab-summary v1";
pub const AGGREGATE_TAG: &str = "# faultlab-aggregate v1";
pub const COMPARISON_TAG: &str = "# faultlab-comparison v1";

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

pub const SUMMARY_HEADER: &str = "id,mode,scenario,entry,target,fault_type,valid,activated,t_activation,t_manifest,hazards,hazard_times,alerts,alert_times,t_r";
pub const AGGREGATE_HEADER: &str = "table,mode,group,injected,invalid,activated,manifested,sdc,hazards,h1,h2,h3,activation_rate,manifestation_rate,coverage,alerts,hazards_no_alert,alerts_no_hazard,no_alert_fraction,mean_t_r,mean_t_manifest";
pub const COMPARISON_HEADER: &str = "mode,injected,activated,activation_rate,manifestation_rate,coverage,alert_rate";

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn joined<I: IntoIterator<Item = String>>(it: I) -> String {
    it.into_iter().collect::<Vec<_>>().join(";")
}

pub fn events_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = format!("{EVENTS_TAG}\n");
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Record(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_events(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(tag) if tag.trim_end() == EVENTS_TAG => {}
        other => {
            return Err(Error::Record(format!(
                "expected `{EVENTS_TAG}` as first line, found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Record(format!("event line {}: {e}", i + 2))))
        .collect()
}

pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{SUMMARY_TAG}\n{SUMMARY_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.id,
            r.mode.as_str(),
            r.scenario,
            r.entry,
            r.target.as_str(),
            r.fault_type,
            r.valid,
            r.activated(),
            opt(r.activation_t),
            opt(r.manifestation_t),
            joined(r.hazards.iter().map(|h| h.kind.as_str().to_string())),
            joined(r.hazards.iter().map(|h| num(h.t))),
            joined(r.alerts.iter().map(|a| a.kind.as_str().to_string())),
            joined(r.alerts.iter().map(|a| num(a.t))),
            opt(r.reaction_time()),
        );
    }
    out
}

fn aggregate_row(out: &mut String, table: &str, mode: &str, group: &str, m: &CampaignMetrics) {
    let _ = writeln!(
        out,
        "{table},{mode},{group},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.injected,
        m.invalid,
        m.activated,
        m.manifested,
        m.sdc,
        m.hazards,
        m.hazards_by_kind[0],
        m.hazards_by_kind[1],
        m.hazards_by_kind[2],
        num(m.activation_rate()),
        num(m.manifestation_rate()),
        num(m.hazard_coverage),
        m.alerts,
        m.hazards_no_alert,
        m.alerts_no_hazard,
        num(m.no_alert_fraction()),
        opt(mean(&m.reaction_times)),
        opt(mean(&m.manifestation_times)),
    );
}

fn modes_present(records: &[RunRecord]) -> Vec<TriggerMode> {
    records.iter().map(|r| r.mode).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Rows: overall per mode, per mode and scenario, per mode and fault type.
pub fn aggregate_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{AGGREGATE_TAG}\n{AGGREGATE_HEADER}\n");
    let fault_types: BTreeSet<&str> = records.iter().map(|r| r.fault_type.as_str()).collect();
    for mode in modes_present(records) {
        let of_mode: Vec<&RunRecord> = records.iter().filter(|r| r.mode == mode).collect();
        aggregate_row(&mut out, "overall", mode.as_str(), "all", &compute_metrics(of_mode.iter().copied()));
        for s in ScenarioId::ALL {
            let rs = of_mode.iter().copied().filter(|r| r.scenario == s);
            let m = compute_metrics(rs);
            if m.injected + m.invalid > 0 {
                aggregate_row(&mut out, "scenario", mode.as_str(), s.as_str(), &m);
            }
        }
        for ft in &fault_types {
            let m = compute_metrics(of_mode.iter().copied().filter(|r| r.fault_type == *ft));
            if m.injected + m.invalid > 0 {
                aggregate_row(&mut out, "fault", mode.as_str(), ft, &m);
            }
        }
    }
    out
}

pub fn comparison(records: &[RunRecord]) -> ComparisonReport {
    let g = compute_metrics(records.iter().filter(|r| r.mode == TriggerMode::Guided));
    let r = compute_metrics(records.iter().filter(|r| r.mode == TriggerMode::Random));
    compare_guided_random(&g, &r)
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = format!("{COMPARISON_TAG}\n{COMPARISON_HEADER}\n");
    for (mode, s) in [("guided", &report.guided), ("random", &report.random)] {
        let _ = writeln!(
            out,
            "{mode},{},{},{},{},{},{}",
            s.injected,
            s.activated,
            num(s.activation_rate),
            num(s.manifestation_rate),
            num(s.hazard_coverage),
            num(s.alert_rate)
        );
    }
    let _ = writeln!(out, "# guided_coverage_ge_random={}", report.guided_coverage_ge_random);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub events: PathBuf,
    pub summary: PathBuf,
    pub aggregate: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the event log and both tables into `dir`, creating it if needed.
/// Every file is rendered in memory first, so a failure leaves no half
/// written table behind the error.
pub fn emit_reports(records: &[RunRecord], dir: &Path) -> Result<ReportPaths> {
    let events = events_jsonl(records)?;
    let summary = summary_csv(records);
    let aggregate = aggregate_csv(records);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ReportPaths {
        events: dir.join(EVENTS_FILE),
        summary: dir.join(SUMMARY_FILE),
        aggregate: dir.join(AGGREGATE_FILE),
    };
    write(&paths.events, &events)?;
    write(&paths.summary, &summary)?;
    write(&paths.aggregate, &aggregate)?;
    Ok(paths)
}

pub fn write_comparison(report: &ComparisonReport, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(COMPARISON_FILE);
    write(&path, &comparison_csv(report))?;
    Ok(path)
}

pub fn load_events(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_events(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{Alert, AlertKind};
    use crate::fault::FaultTarget;
    use crate::hazard::{HazardEvent, HazardKind};

    fn rec(id: usize, mode: TriggerMode) -> RunRecord {
        RunRecord {
            id,
            mode,
            scenario: ScenarioId::S2,
            entry: "radar-jam".into(),
            target: FaultTarget::RadarJam,
            fault_type: "RadarJam".into(),
            valid: true,
            invalid_reason: None,
            activation_t: Some(3.0),
            manifestation_t: Some(3.0),
            hazards: vec![HazardEvent { kind: HazardKind::H1, t: 9.5 }],
            collision_t: None,
            alerts: vec![Alert { kind: AlertKind::CanError, t: 3.0 }],
            end_t: 30.0,
        }
    }

    #[test]
    fn empty_campaign_headers_only() {
        assert_eq!(summary_csv(&[]).lines().count(), 2);
        assert_eq!(aggregate_csv(&[]).lines().count(), 2);
        assert_eq!(events_jsonl(&[]).unwrap(), format!("{EVENTS_TAG}\n"));
    }

    #[test]
    fn summary_row_layout() {
        let s = summary_csv(&[rec(4, TriggerMode::Random)]);
        let row = s.lines().nth(2).unwrap();
        assert_eq!(
            row,
            "4,random,S2,radar-jam,RadarJam,RadarJam,true,true,3.000000,3.000000,H1,9.500000,CanError,3.000000,6.500000"
        );
        assert_eq!(row.split(',').count(), SUMMARY_HEADER.split(',').count());
    }

    #[test]
    fn events_roundtrip() {
        let recs = vec![rec(0, TriggerMode::Guided), rec(1, TriggerMode::Random)];
        let text = events_jsonl(&recs).unwrap();
        assert_eq!(parse_events(&text).unwrap(), recs);
        assert!(parse_events("{}\n").is_err());
    }

    #[test]
    fn aggregate_rows() {
        let recs = vec![rec(0, TriggerMode::Guided), rec(1, TriggerMode::Random)];
        let text = aggregate_csv(&recs);
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows.len(), 6);
        assert!(rows[0].starts_with("overall,guided,all,1,0,1,1,0,1,1,0,0,"));
        for r in rows {
            assert_eq!(r.split(',').count(), AGGREGATE_HEADER.split(',').count());
        }
    }

    #[test]
    fn writes_files_and_reports_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![rec(0, TriggerMode::Guided)];
        let paths = emit_reports(&recs, dir.path()).unwrap();
        assert_eq!(load_events(&paths.events).unwrap(), recs);
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        assert!(matches!(emit_reports(&recs, &blocker.join("sub")), Err(Error::Io { .. })));
    }
}
