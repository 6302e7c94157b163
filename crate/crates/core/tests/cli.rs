use std::path::Path;
use std::process::{Command, Output};

use faultlab::campaign::report::{AGGREGATE_TAG, COMPARISON_TAG, EVENTS_TAG, SUMMARY_TAG};
use faultlab::campaign::{load_events, Experiment};
use faultlab::vision::Image;

const SMALL: &str = r#"
[campaign]
seed = 11
repetitions = 2
scenarios = ["S1", "S4"]
duration = 6.0

[[library]]
name = "jam"
model = { target = "RadarJam" }
context = { action = "decelerate", provided = false, hwt = "le" }

[[library]]
name = "steer"
model = { target = "CarSteer" }
context = { action = "decelerate", provided = true, hwt = "gt" }

[[library]]
name = "fog"
model = { target = "VisionImageEffect", effect = { kind = "Fog", thickness = 4.0 } }
context = { action = "decelerate", provided = true, hwt = "gt" }
"#;

fn faultlab(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_faultlab")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "faultlab {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn setup() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let cfg = cfg.to_str().unwrap().to_string();
    (dir, cfg)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn experiments(dir: &Path) -> Vec<Experiment> {
    let text = read(&dir.join("experiments.jsonl"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# faultlab-experiments v1"));
    lines.map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn generate_counts_and_filters() {
    let (dir, cfg) = setup();
    let out = dir.path().join("gen");
    let stdout = String::from_utf8(faultlab(&["generate", "-c", &cfg, "-o", out.to_str().unwrap()]).stdout).unwrap();
    assert!(stdout.contains("experiments: 24"), "{stdout}");
    assert_eq!(experiments(&out).len(), 24);

    faultlab(&[
        "generate",
        "-c",
        &cfg,
        "-o",
        out.to_str().unwrap(),
        "--scenario",
        "S4",
        "--target",
        "radarjam,CarSteer",
    ]);
    let exps = experiments(&out);
    assert_eq!(exps.len(), 8);
    assert!(exps.iter().all(|e| e.scenario.as_str() == "S4" && e.entry != "fog"));
}

#[test]
fn seed_override_changes_draws() {
    let (dir, cfg) = setup();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    faultlab(&["generate", "-c", &cfg, "-o", a.to_str().unwrap()]);
    faultlab(&["generate", "-c", &cfg, "-o", b.to_str().unwrap(), "--seed", "12"]);
    let (ea, eb) = (experiments(&a), experiments(&b));
    assert_eq!(ea.len(), eb.len());
    assert!(ea.iter().zip(&eb).all(|(x, y)| x.seed != y.seed));
}

#[test]
fn run_report_compare_roundtrip() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    faultlab(&["run", "-c", &cfg, "-o", o, "-w", "2", "--export-frames"]);

    for (file, tag) in [("events.jsonl", EVENTS_TAG), ("summary.csv", SUMMARY_TAG), ("aggregate.csv", AGGREGATE_TAG)] {
        assert_eq!(read(&out.join(file)).lines().next(), Some(tag), "{file}");
    }
    let records = load_events(&out.join("events.jsonl")).unwrap();
    assert_eq!(records.len(), 24);
    let summary = read(&out.join("summary.csv"));
    let aggregate = read(&out.join("aggregate.csv"));

    faultlab(&["report", "-o", o]);
    assert_eq!(read(&out.join("summary.csv")), summary);
    assert_eq!(read(&out.join("aggregate.csv")), aggregate);

    let stdout = String::from_utf8(faultlab(&["compare", "-o", o]).stdout).unwrap();
    let cmp = read(&out.join("comparison.csv"));
    assert_eq!(cmp.lines().next(), Some(COMPARISON_TAG));
    assert!(stdout.starts_with(COMPARISON_TAG));
    assert!(cmp.contains("\nguided,") && cmp.contains("\nrandom,"));

    let frames = out.join("frames");
    let clean = read_header(&frames.join("clean.raw"));
    assert_eq!(clean, "640 120");
    let exported: Vec<_> = std::fs::read_dir(&frames).unwrap().collect();
    // Clean frame plus one per fog experiment.
    assert_eq!(exported.len(), 1 + 8);
    let img = Image::load_raw(&frames.join("clean.raw")).unwrap();
    assert_eq!((img.width(), img.height()), (640, 120));
}

fn read_header(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    let end = bytes.iter().position(|&b| b == b'\n').unwrap();
    String::from_utf8(bytes[..end].to_vec()).unwrap()
}

#[test]
fn worker_count_keeps_reports_identical() {
    let (dir, cfg) = setup();
    let one = dir.path().join("one");
    let three = dir.path().join("three");
    faultlab(&["run", "-c", &cfg, "-o", one.to_str().unwrap()]);
    faultlab(&["run", "-c", &cfg, "-o", three.to_str().unwrap(), "-w", "3"]);
    for file in ["events.jsonl", "summary.csv", "aggregate.csv"] {
        assert_eq!(read(&one.join(file)), read(&three.join(file)), "{file}");
    }
}

#[test]
fn bad_inputs_fail_cleanly() {
    let (dir, _) = setup();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[campaign]\ndt = -1.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_faultlab"))
        .args(["generate", "-c", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));

    let out = Command::new(env!("CARGO_BIN_EXE_faultlab"))
        .args(["report", "-o", dir.path().join("missing").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = Command::new(env!("CARGO_BIN_EXE_faultlab"))
        .args(["run", "-w", "0", "-o", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
