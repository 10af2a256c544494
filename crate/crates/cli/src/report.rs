//! Aggregation of a results table into per-point statistics and checks.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use seca_core::metrics::{complexity_fit, mean_std, trend, GrowthBands};
use seca_core::{DetectorKind, Fit};

use crate::error::CliError;
use crate::sweep::{format_axis, Manifest, CSV_COLUMNS, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub axis_value: f64,
    pub seed: u64,
    pub detector: DetectorKind,
    pub recall: f64,
    pub precision: f64,
    pub true_pairs: u64,
    pub detected_pairs: u64,
    pub clock_updates: u64,
    pub stamp_words_sent: u64,
    pub pair_checks: u64,
    pub wall_ms: f64,
}

/// Parses a results table, rejecting foreign headers and malformed lines.
pub fn read_rows<R: Read>(input: R, path: &Path) -> Result<Vec<CsvRow>, CliError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| CliError::input(path, format!("line 1: {e}")))?
        .clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(CliError::input(
            path,
            format!("line 1: expected columns {}", CSV_COLUMNS.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for result in reader.deserialize::<CsvRow>() {
        let row = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::input(path, format!("line {line}: {e}"))
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input(path, "no result rows"));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub runs: usize,
    pub recall_mean: f64,
    pub recall_sd: f64,
    pub precision_mean: f64,
    pub precision_sd: f64,
    pub clock_updates_mean: f64,
    pub stamp_words_sent_mean: f64,
    pub pair_checks_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub axis_value: f64,
    pub detectors: BTreeMap<DetectorKind, PointStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub stamp_words_sent: Option<Fit>,
    pub pair_checks: Option<Fit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub axis: String,
    pub points: Vec<PointSummary>,
    /// Rank correlation of mean recall against the axis, per detector.
    pub recall_trend: BTreeMap<DetectorKind, Option<f64>>,
    pub growth: BTreeMap<DetectorKind, Growth>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn stats(rows: &[&CsvRow]) -> PointStats {
    let col = |f: fn(&CsvRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let (recall_mean, recall_sd) = mean_std(&col(|r| r.recall));
    let (precision_mean, precision_sd) = mean_std(&col(|r| r.precision));
    PointStats {
        runs: rows.len(),
        recall_mean,
        recall_sd,
        precision_mean,
        precision_sd,
        clock_updates_mean: mean_std(&col(|r| r.clock_updates as f64)).0,
        stamp_words_sent_mean: mean_std(&col(|r| r.stamp_words_sent as f64)).0,
        pair_checks_mean: mean_std(&col(|r| r.pair_checks as f64)).0,
    }
}

pub fn summarize(rows: &[CsvRow], axis: &str) -> Summary {
    let mut xs: Vec<f64> = rows.iter().map(|r| r.axis_value).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let mut kinds: Vec<DetectorKind> = rows.iter().map(|r| r.detector).collect();
    kinds.sort();
    kinds.dedup();

    let points: Vec<PointSummary> = xs
        .iter()
        .map(|&x| PointSummary {
            axis_value: x,
            detectors: kinds
                .iter()
                .filter_map(|&k| {
                    let sel: Vec<&CsvRow> = rows
                        .iter()
                        .filter(|r| r.axis_value == x && r.detector == k)
                        .collect();
                    (!sel.is_empty()).then(|| (k, stats(&sel)))
                })
                .collect(),
        })
        .collect();

    let series = |k: DetectorKind, f: fn(&PointStats) -> f64| -> (Vec<f64>, Vec<f64>) {
        points
            .iter()
            .filter_map(|p| p.detectors.get(&k).map(|s| (p.axis_value, f(s))))
            .unzip()
    };
    let bands = GrowthBands::default();
    let mut recall_trend = BTreeMap::new();
    let mut growth = BTreeMap::new();
    for &k in &kinds {
        let (px, recall) = series(k, |s| s.recall_mean);
        recall_trend.insert(k, trend(&px, &recall).ok());
        let (wx, words) = series(k, |s| s.stamp_words_sent_mean);
        let (cx, checks) = series(k, |s| s.pair_checks_mean);
        growth.insert(
            k,
            Growth {
                stamp_words_sent: complexity_fit(&wx, &words, &bands).ok(),
                pair_checks: complexity_fit(&cx, &checks, &bands).ok(),
            },
        );
    }

    let mut checks = Vec::new();
    if kinds.contains(&DetectorKind::Seca) && kinds.contains(&DetectorKind::Ceda) {
        let behind: Vec<String> = points
            .iter()
            .filter_map(|p| {
                let s = p.detectors.get(&DetectorKind::Seca)?;
                let c = p.detectors.get(&DetectorKind::Ceda)?;
                (s.recall_mean < c.recall_mean).then(|| {
                    format!(
                        "{}={} ({:.4} < {:.4})",
                        axis,
                        format_axis(p.axis_value),
                        s.recall_mean,
                        c.recall_mean
                    )
                })
            })
            .collect();
        checks.push(Check {
            name: "seca_recall_at_least_ceda".into(),
            passed: behind.is_empty(),
            detail: if behind.is_empty() {
                "at every point".into()
            } else {
                behind.join("; ")
            },
        });
    }
    for k in [DetectorKind::Seca, DetectorKind::Ceda] {
        if let Some(Some(rho)) = recall_trend.get(&k) {
            checks.push(Check {
                name: format!("{}_recall_trend_non_positive", k.as_str().to_lowercase()),
                passed: *rho <= 0.0,
                detail: format!("spearman {rho:.4}"),
            });
        }
    }

    Summary {
        schema_version: SCHEMA_VERSION,
        axis: axis.to_string(),
        points,
        recall_trend,
        growth,
        checks,
    }
}

fn axis_name(csv_path: &Path) -> String {
    let manifest = csv_path.with_file_name("manifest.json");
    std::fs::read_to_string(manifest)
        .ok()
        .and_then(|t| serde_json::from_str::<Manifest>(&t).ok())
        .map(|m| m.spec.sweep.axis.to_string())
        .unwrap_or_else(|| "axis_value".to_string())
}

pub fn print_summary(s: &Summary) {
    println!("{:>12}  {:<5} {:>5}  {:>17}  {:>17}", s.axis, "det", "runs", "recall", "precision");
    for p in &s.points {
        for (k, st) in &p.detectors {
            println!(
                "{:>12}  {:<5} {:>5}  {:.4} ± {:.4}  {:.4} ± {:.4}",
                format_axis(p.axis_value),
                k.as_str(),
                st.runs,
                st.recall_mean,
                st.recall_sd,
                st.precision_mean,
                st.precision_sd
            );
        }
    }
    for (k, rho) in &s.recall_trend {
        match rho {
            Some(r) => println!("trend {k}: {r:+.4}"),
            None => println!("trend {k}: n/a"),
        }
    }
    for (k, g) in &s.growth {
        let show = |f: &Option<Fit>| match f {
            Some(f) => format!("{:.3} ({:?})", f.slope, f.class),
            None => "n/a".into(),
        };
        println!(
            "growth {k}: stamp_words_sent {}, pair_checks {}",
            show(&g.stamp_words_sent),
            show(&g.pair_checks)
        );
    }
    for c in &s.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

pub fn cmd_report(csv_path: &Path, out: Option<&Path>) -> Result<Summary, CliError> {
    let file = std::fs::File::open(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let rows = read_rows(std::io::BufReader::new(file), csv_path)?;
    let summary = summarize(&rows, &axis_name(csv_path));
    print_summary(&summary);

    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => csv_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}
