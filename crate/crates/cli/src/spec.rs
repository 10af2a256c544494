//! Experiment spec files.
//!
//! ```json
//! {
//!   "name": "nodes",
//!   "base": { "instances_per_node": 2, "message_delay_ms": [0.25, 8.0] },
//!   "sweep": { "axis": "nodes", "points": [2, 5, 10, 15, 20] },
//!   "seeds": [0, 1, 2],
//!   "detectors": ["SECA", "CEDA"]
//! }
//! ```
//!
//! Every field except `sweep` has a default. Omitted `seeds` means 30 seeds
//! `0..30`; omitted `detectors` means SECA and CEDA.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use seca_core::{DetectorKind, RunOptions, SimConfig};

use crate::error::CliError;

pub const DEFAULT_SEEDS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Nodes,
    /// Upper end of the delay range in ms; the lower end keeps the base ratio.
    DelayMs,
    ErrorRate,
    EventsPerProcess,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Nodes => "nodes",
            Axis::DelayMs => "delay_ms",
            Axis::ErrorRate => "error_rate",
            Axis::EventsPerProcess => "events_per_process",
        }
    }

    fn integral(&self) -> bool {
        matches!(self, Axis::Nodes | Axis::EventsPerProcess)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub points: Vec<f64>,
}

fn default_seeds() -> Vec<u64> {
    (0..DEFAULT_SEEDS).collect()
}

fn default_detectors() -> Vec<DetectorKind> {
    vec![DetectorKind::Seca, DetectorKind::Ceda]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub base: SimConfig,
    pub sweep: Sweep,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorKind>,
    #[serde(default)]
    pub run: RunOptions,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let spec: Self = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Replaces the seed list with `first, first + 1, ...` of the same length.
    pub fn override_seeds(&mut self, first: u64) {
        let n = self.seeds.len() as u64;
        self.seeds = (0..n).map(|i| first.wrapping_add(i)).collect();
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |field: &str, reason: &str| {
            Err(CliError::Field {
                field: field.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.sweep.points.is_empty() {
            return field("sweep.points", "must not be empty");
        }
        if self.seeds.is_empty() {
            return field("seeds", "must not be empty");
        }
        if self.detectors.is_empty() {
            return field("detectors", "must name at least one detector");
        }
        for &v in &self.sweep.points {
            if !v.is_finite() || v < 0.0 {
                return field("sweep.points", "points must be finite and non-negative");
            }
            if self.sweep.axis.integral() && v.fract() != 0.0 {
                return field("sweep.points", "this axis takes whole numbers");
            }
            for &seed in &self.seeds {
                self.config_for(v, seed)
                    .validate()
                    .map_err(|e| CliError::Field {
                        field: format!("base.{} (at {} = {v})", e.field, self.sweep.axis),
                        reason: e.reason,
                    })?;
            }
        }
        Ok(())
    }

    /// The workload for one sweep point and seed.
    pub fn config_for(&self, point: f64, seed: u64) -> SimConfig {
        let mut cfg = self.base.clone();
        cfg.seed = seed;
        match self.sweep.axis {
            Axis::Nodes => cfg.nodes = point as usize,
            Axis::EventsPerProcess => cfg.events_per_process = point as usize,
            Axis::ErrorRate => cfg.error_rate = point,
            Axis::DelayMs => {
                let (lo, hi) = self.base.message_delay_ms;
                let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
                cfg.message_delay_ms = (point * ratio, point);
            }
        }
        cfg
    }
}
