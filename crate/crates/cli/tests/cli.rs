use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seca_cli::scenarios::default_fixture_dir;

fn seca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seca"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_SPEC: &str = r#"{
  "name": "small",
  "base": { "events_per_process": 6 },
  "sweep": { "axis": "nodes", "points": [2, 3, 4] },
  "seeds": [1, 2],
  "detectors": ["SECA", "CEDA", "PCA"]
}"#;

fn write_spec(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("spec.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn scenarios_pass_on_shipped_fixtures() {
    let o = seca(&["scenarios"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = text(&o);
    assert!(out.contains("SECA ✓a ✓b ✗c"), "{out}");
    assert!(out.contains("CEDA ✗a ✗b ✗c"), "{out}");
}

#[test]
fn scenarios_verbose_dumps_stamps() {
    let o = seca(&["scenarios", "--verbose"]);
    assert!(text(&o).contains("snapshot [1, 3)"), "{}", text(&o));
}

#[test]
fn tampered_scenario_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(default_fixture_dir()).unwrap() {
        let p = entry.unwrap().path();
        let body = std::fs::read_to_string(&p).unwrap();
        let body = if p.ends_with("scenario_b.jsonl") {
            body.lines().filter(|l| !l.contains("\"message\"")).collect::<Vec<_>>().join("\n")
        } else {
            body
        };
        std::fs::write(tmp.path().join(p.file_name().unwrap()), body).unwrap();
    }
    let o = seca(&["scenarios", "--fixtures", s(tmp.path()), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("scenario b did not behave"), "{}", text(&o));
    assert!(tmp.path().join("scenarios.json").is_file());
}

#[test]
fn missing_fixture_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = seca(&["scenarios", "--fixtures", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("scenario_a.jsonl"), "{}", text(&o));
}

#[test]
fn sweep_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL_SPEC);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = seca(&["sweep", "--spec", s(&spec), "--out", s(out), "--jobs", jobs]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    }
    let csv_a = std::fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read_to_string(b.join("results.csv")).unwrap());
    let mut lines = csv_a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis_value,seed,detector,recall,precision,true_pairs,detected_pairs,clock_updates,stamp_words_sent,pair_checks,wall_ms"
    );
    assert_eq!(lines.count(), 3 * 2 * 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["spec"]["seeds"], serde_json::json!([1, 2]));
    assert_eq!(manifest["completed_points"], 3);
}

#[test]
fn seed_override_changes_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL_SPEC);
    let out = tmp.path().join("o");
    let o = seca(&["sweep", "--spec", s(&spec), "--out", s(&out), "--seed-override", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("2,40,SECA,"), "{csv}");
    assert!(csv.contains(",41,PCA,"));
}

#[test]
fn invalid_spec_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), r#"{"base":{"error_rate":1.5},"sweep":{"axis":"nodes","points":[2]}}"#);
    let o = seca(&["sweep", "--spec", s(&spec), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("error_rate"), "{}", text(&o));

    let spec = write_spec(tmp.path(), r#"{"sweep":{"axis":"nodes","points":[2]},"detectors":[]}"#);
    let o = seca(&["sweep", "--spec", s(&spec), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("detectors"), "{}", text(&o));
}

const HEADER: &str = "axis_value,seed,detector,recall,precision,true_pairs,detected_pairs,clock_updates,stamp_words_sent,pair_checks,wall_ms";

fn write_csv(dir: &Path, ceda_recalls: [f64; 3]) -> PathBuf {
    let mut body = format!("{HEADER}\n");
    for (i, x) in [2, 4, 8].iter().enumerate() {
        body += &format!("{x},0,SECA,{},1.000000,10,9,5,5,5,40.000\n", 0.9 - 0.1 * i as f64);
        body += &format!("{x},0,CEDA,{},1.000000,10,9,5,5,5,40.000\n", ceda_recalls[i]);
    }
    let p = dir.join("results.csv");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn report_passes_and_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_csv(tmp.path(), [0.85, 0.75, 0.65]);
    let o = seca(&["report", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["recall_trend"]["SECA"], -1.0);
    assert_eq!(summary["points"].as_array().unwrap().len(), 3);
}

#[test]
fn report_flags_failed_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_csv(tmp.path(), [0.85, 0.95, 0.65]);
    let out = tmp.path().join("summary");
    let o = seca(&["report", s(&csv), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("[FAIL] seca_recall_at_least_ceda"), "{}", text(&o));
    assert!(out.join("summary.json").is_file());
}

#[test]
fn report_rejects_bad_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("results.csv");
    std::fs::write(&p, format!("{HEADER}\n")).unwrap();
    assert_eq!(seca(&["report", s(&p)]).status.code(), Some(2));
    std::fs::write(&p, format!("{HEADER}\n2,0,SECA,0.5,1,1,1,1,1,1,1\n2,0,XXXX,0.5,1,1,1,1,1,1,1\n")).unwrap();
    let o = seca(&["report", s(&p)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("line 3"), "{}", text(&o));
    assert_eq!(seca(&["report", s(&tmp.path().join("absent.csv"))]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(seca(&[]).status.code(), Some(2));
    assert_eq!(seca(&["sweep"]).status.code(), Some(2));
    assert_eq!(seca(&["sweep", "--spec", "x", "--out", "y", "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(seca(&["--help"]).status.code(), Some(0));
}
