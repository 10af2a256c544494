//! Sweep execution and the results table.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seca_core::simulator::score_against;
use seca_core::{generate_trace, ground_truth, run_trace, Accuracy, DetectorKind, OpCounters};

use crate::error::CliError;
use crate::spec::ExperimentSpec;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 11] = [
    "axis_value",
    "seed",
    "detector",
    "recall",
    "precision",
    "true_pairs",
    "detected_pairs",
    "clock_updates",
    "stamp_words_sent",
    "pair_checks",
    "wall_ms",
];

/// One detector run at one sweep point and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub axis_value: f64,
    pub seed: u64,
    pub detector: DetectorKind,
    pub accuracy: Accuracy,
    pub counters: OpCounters,
    pub drops: u64,
    pub degraded: bool,
    /// Simulated span of the trace.
    pub span_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobFailure {
    pub axis_value: f64,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    /// In spec order: point, then seed, then detector.
    pub records: Vec<Record>,
    pub failures: Vec<JobFailure>,
}

fn run_job(spec: &ExperimentSpec, point: f64, seed: u64) -> Result<Vec<Record>, String> {
    let trace = generate_trace(&spec.config_for(point, seed)).map_err(|e| e.to_string())?;
    let truth = ground_truth(&trace);
    let span_us = trace.span_us();
    spec.detectors
        .iter()
        .map(|&kind| {
            let run = run_trace(&trace, kind, &spec.run).map_err(|e| format!("{kind}: {e}"))?;
            Ok(Record {
                axis_value: point,
                seed,
                detector: kind,
                accuracy: score_against(&trace, &truth, &run.detected),
                counters: run.counters,
                drops: run.drops,
                degraded: run.degraded,
                span_us,
            })
        })
        .collect()
}

/// Runs every (point, seed) job on a pool of `jobs` threads.
pub fn run_sweep(spec: &ExperimentSpec, jobs: usize) -> Result<SweepOutcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let grid: Vec<(f64, u64)> = spec
        .sweep
        .points
        .iter()
        .flat_map(|&p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let results: Vec<_> = pool.install(|| {
        grid.par_iter()
            .map(|&(p, s)| (p, s, run_job(spec, p, s)))
            .collect()
    });
    let mut out = SweepOutcome::default();
    for (axis_value, seed, r) in results {
        match r {
            Ok(records) => out.records.extend(records),
            Err(reason) => out.failures.push(JobFailure {
                axis_value,
                seed,
                reason,
            }),
        }
    }
    Ok(out)
}

pub fn format_axis(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn csv_fields(r: &Record) -> [String; 11] {
    [
        format_axis(r.axis_value),
        r.seed.to_string(),
        r.detector.to_string(),
        format!("{:.6}", r.accuracy.recall),
        format!("{:.6}", r.accuracy.precision),
        r.accuracy.true_pairs.to_string(),
        r.accuracy.detected_pairs.to_string(),
        r.counters.clock_updates.to_string(),
        r.counters.stamp_words_sent.to_string(),
        r.counters.pair_checks.to_string(),
        format!("{:.3}", r.span_us as f64 / 1000.0),
    ]
}

pub fn write_csv<W: Write>(records: &[Record], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(csv_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[Record]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub csv_columns: Vec<String>,
    /// Complete spec with the effective seeds; any row is reproducible from it.
    pub spec: ExperimentSpec,
    pub rows: usize,
    pub completed_points: usize,
    pub total_points: usize,
    pub failures: Vec<JobFailure>,
    pub degraded_runs: usize,
    pub jobs: usize,
    pub host_elapsed_ms: u128,
}

pub struct SweepArgs<'a> {
    pub spec: &'a Path,
    pub out: &'a Path,
    pub jobs: usize,
    pub seed_override: Option<u64>,
    pub verbose: bool,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut spec = ExperimentSpec::load(args.spec)?;
    if let Some(first) = args.seed_override {
        spec.override_seeds(first);
    }
    std::fs::create_dir_all(args.out).map_err(|e| CliError::io(args.out, e))?;

    let started = Instant::now();
    let outcome = run_sweep(&spec, args.jobs)?;
    let elapsed = started.elapsed().as_millis();

    let csv_path = args.out.join("results.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    write_csv(&outcome.records, std::io::BufWriter::new(file))
        .map_err(|e| CliError::io(&csv_path, e.into()))?;

    let total_points = spec.sweep.points.len();
    let completed_points = spec
        .sweep
        .points
        .iter()
        .filter(|&&p| outcome.failures.iter().all(|f| f.axis_value != p))
        .count();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        csv_columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
        spec: spec.clone(),
        rows: outcome.records.len(),
        completed_points,
        total_points,
        failures: outcome.failures.clone(),
        degraded_runs: outcome.records.iter().filter(|r| r.degraded).count(),
        jobs: args.jobs,
        host_elapsed_ms: elapsed,
    };
    let manifest_path = args.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| CliError::io(&manifest_path, e))?;

    if args.verbose {
        for f in &outcome.failures {
            eprintln!("failed {} = {} seed {}: {}", spec.sweep.axis, format_axis(f.axis_value), f.seed, f.reason);
        }
    }
    println!(
        "{} rows, {}/{} points complete, {} ms -> {}",
        outcome.records.len(),
        completed_points,
        total_points,
        elapsed,
        csv_path.display()
    );
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} of {} jobs failed; {completed_points} of {total_points} points complete",
            outcome.failures.len(),
            total_points * spec.seeds.len()
        )))
    }
}
