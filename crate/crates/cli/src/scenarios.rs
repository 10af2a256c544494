//! The three canned one-sided/no-knowledge overlap scenarios.

use std::path::{Path, PathBuf};

use serde::Serialize;

use seca_core::detectors::{CedaDetector, SecaDetector};
use seca_core::simulator::{replay, replay_schedule};
use seca_core::{DetectorKind, EventId, EventPair, RunOptions, Trace};

use crate::error::CliError;

pub struct Scenario {
    pub name: &'static str,
    pub file: &'static str,
    pub seca_detects: bool,
}

/// Each scenario's pair of interest is (P0#0, P1#0); CEDA misses it in all three.
pub const SCENARIOS: [Scenario; 3] = [
    Scenario { name: "a", file: "scenario_a.jsonl", seca_detects: true },
    Scenario { name: "b", file: "scenario_b.jsonl", seca_detects: true },
    Scenario { name: "c", file: "scenario_c.jsonl", seca_detects: false },
];

pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub fixture: PathBuf,
    pub seca_pair: bool,
    pub ceda_pairs: usize,
    pub expected_seca_pair: bool,
    pub passed: bool,
}

fn pair_of_interest() -> EventPair {
    EventPair::new(EventId::new(0, 0), EventId::new(1, 0)).expect("distinct events")
}

pub fn load_fixture(path: &Path) -> Result<Trace, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Trace::from_jsonl_str(&text).map_err(|e| CliError::input(path, e))
}

fn dump(trace: &Trace, seca: &SecaDetector, ceda: &CedaDetector) {
    for e in &trace.events {
        let own = seca
            .process(e.id.process)
            .and_then(|p| p.interval(e.id))
            .map(|iv| format!("[{}, {})", iv.lo.tick, iv.hi.tick))
            .unwrap_or_else(|| "-".into());
        let vec = ceda
            .intervals()
            .iter()
            .find(|(id, _)| *id == e.id)
            .map(|(_, iv)| format!("{:?} .. {:?}", iv.lo.slots(), iv.hi.slots()))
            .unwrap_or_else(|| "-".into());
        println!("    {}  wall [{}, {}) us  snapshot {}  vector {}", e.id, e.start_us, e.end_us, own, vec);
    }
}

pub fn run_scenario(s: &Scenario, dir: &Path, verbose: bool) -> Result<ScenarioOutcome, CliError> {
    let path = dir.join(s.file);
    if !path.is_file() {
        return Err(CliError::input(&path, "fixture not found"));
    }
    let trace = load_fixture(&path)?;
    let schedule = replay_schedule(&trace);
    let readings = trace.readings();
    let opts = RunOptions::default();
    let fail = |kind: DetectorKind, e| CliError::input(&path, format!("{kind} replay: {e}"));

    let mut seca = SecaDetector::new(trace.processes(), trace.config.clock);
    let seca_run = replay(&mut seca, &trace, &schedule, &readings, &opts)
        .map_err(|e| fail(DetectorKind::Seca, e))?;
    let mut ceda = CedaDetector::new(trace.processes(), trace.config.clock);
    let ceda_run = replay(&mut ceda, &trace, &schedule, &readings, &opts)
        .map_err(|e| fail(DetectorKind::Ceda, e))?;
    if verbose {
        println!("  scenario {}:", s.name);
        dump(&trace, &seca, &ceda);
    }

    let seca_pair = seca_run.detected.contains(&pair_of_interest());
    let ceda_pairs = ceda_run.detected.len();
    Ok(ScenarioOutcome {
        name: s.name.to_string(),
        fixture: path,
        seca_pair,
        ceda_pairs,
        expected_seca_pair: s.seca_detects,
        passed: seca_pair == s.seca_detects && ceda_pairs == 0,
    })
}

pub fn cmd_scenarios(dir: &Path, out: Option<&Path>, verbose: bool) -> Result<Vec<ScenarioOutcome>, CliError> {
    let outcomes = SCENARIOS
        .iter()
        .map(|s| run_scenario(s, dir, verbose))
        .collect::<Result<Vec<_>, _>>()?;

    let mark = |b: bool| if b { "✓" } else { "✗" };
    let seca: Vec<String> = outcomes.iter().map(|o| format!("{}{}", mark(o.seca_pair), o.name)).collect();
    let ceda: Vec<String> = outcomes.iter().map(|o| format!("{}{}", mark(o.ceda_pairs > 0), o.name)).collect();
    println!("SECA {}", seca.join(" "));
    println!("CEDA {}", ceda.join(" "));
    for o in &outcomes {
        println!("[{}] scenario {}", if o.passed { "PASS" } else { "FAIL" }, o.name);
    }

    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("scenarios.json");
        let text = serde_json::to_string_pretty(&outcomes).expect("outcomes serialize");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    }

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        Ok(outcomes)
    } else {
        Err(CliError::Failed(format!("scenario {} did not behave as expected", failed.join(", "))))
    }
}
