//! Concurrent-event detection for context-consistency checking.
//!
//! Three detector families share one driver interface:
//!
//! * SECA tracks each event with a half-open interval of scalar snapshot
//!   ticks and checks message timestamps against it.
//! * CEDA tracks vector-clock intervals and scans every pair centrally.
//! * PCA compares wall-clock intervals directly.
//!
//! The [`simulator`] produces seeded workloads and the ground truth for them;
//! [`metrics`] scores detector output and fits growth rates.
//!
//! Clock and metric code is generic over the scalar type. The aliases below
//! fix the types used by the simulator and the CLI.

pub mod clocks;
pub mod detectors;
pub mod event;
pub mod metrics;
pub mod simulator;

pub use clocks::{ClockError, ClockParams, Interval, IntervalOrder, PhysicalStamp};
pub use detectors::{Detector, DetectorError, DetectorKind};
pub use event::{ContextReading, EventId, EventPair, ProcessId, Violation};
pub use metrics::OpCounters;
pub use simulator::{
    generate_trace, ground_truth, run_trace, GroundTruth, RunOptions, RunResult, SimConfig,
    SimError, Trace,
};

/// Scalar snapshot stamp with 64-bit ticks.
pub type Snapshot = clocks::SnapshotStamp<u64>;
/// Vector stamp with 64-bit slots.
pub type Vector = clocks::VectorStamp<u64>;
pub type SnapshotInterval = Interval<Snapshot>;
pub type VectorInterval = Interval<Vector>;
pub type Accuracy = metrics::AccuracyReport<f64>;
pub type Fit = metrics::GrowthFit<f64>;
