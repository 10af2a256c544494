//! Concurrency detectors.
//!
//! Every family consumes the same stream of driver notifications (event
//! start, event end, message send, message receive) through the
//! [`Detector`] trait, so accuracy comparisons are like for like:
//!
//! * [`seca`]: snapshot clocks, decentralized, one state per process.
//! * [`ceda`]: vector clocks with a central mutual happened-before scan.
//! * [`pca`]: synchronized physical clocks with a sweep-line overlap scan.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocks::{ClockError, ClockPayload};
use crate::event::{ContextReading, EventId, EventPair, ProcessId, Violation};
use crate::metrics::OpCounters;

pub mod ceda;
pub mod pca;
pub mod seca;

pub use ceda::{ceda_detect, CedaDetector};
pub use pca::{pca_detect, PcaDetector};
pub use seca::{Broadcast, PendingPair, SecaDetector, SecaProcess};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectorError {
    #[error("event {0} was already recorded")]
    DuplicateEvent(EventId),
    #[error("event {0} is unknown to process {1}")]
    UnknownEvent(EventId, ProcessId),
    #[error("sender event {0} has no replica entry")]
    UnknownSender(EventId),
    #[error("event {0} does not belong to process {1}")]
    WrongProcess(EventId, ProcessId),
    #[error("process index {0} out of range")]
    NoSuchProcess(ProcessId),
    #[error(transparent)]
    Clock(#[from] ClockError),
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum DetectorKind {
    #[serde(rename = "SECA")]
    Seca,
    #[serde(rename = "CEDA")]
    Ceda,
    #[serde(rename = "PCA")]
    Pca,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Seca, DetectorKind::Ceda, DetectorKind::Pca];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Seca => "SECA",
            DetectorKind::Ceda => "CEDA",
            DetectorKind::Pca => "PCA",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SECA" => Ok(DetectorKind::Seca),
            "CEDA" => Ok(DetectorKind::Ceda),
            "PCA" => Ok(DetectorKind::Pca),
            other => Err(format!("unknown detector `{other}`")),
        }
    }
}

/// A point-to-point message as seen by its receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord<S> {
    pub from_event: EventId,
    pub to_event: EventId,
    /// The sender's stamp piggybacked on the message.
    pub send_stamp: S,
    pub payload: Option<ContextReading>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NotificationKind {
    LocalEvent,
    LocalEnd,
    Send,
    Receive,
}

/// Reference to a trace message carried by a send/receive notification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageRef {
    pub index: usize,
    pub from_event: EventId,
    pub to_event: EventId,
}

/// One step of a replayed trace, addressed to the process `at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub kind: NotificationKind,
    pub at: ProcessId,
    pub event: EventId,
    pub time_us: u64,
    pub msg: Option<MessageRef>,
}

/// Driver-facing interface shared by the detector families.
pub trait Detector {
    type Stamp: Clone + ClockPayload;

    fn kind(&self) -> DetectorKind;

    fn event_started(&mut self, event: EventId, time_us: u64) -> Result<(), DetectorError>;

    fn event_ended(&mut self, event: EventId, time_us: u64) -> Result<(), DetectorError>;

    /// Returns the stamp to piggyback on the outgoing message.
    fn message_sent(
        &mut self,
        from: EventId,
        to: EventId,
        time_us: u64,
    ) -> Result<Self::Stamp, DetectorError>;

    fn message_received(
        &mut self,
        msg: MessageRecord<Self::Stamp>,
        time_us: u64,
    ) -> Result<(), DetectorError>;

    /// Runs the family's detection step and returns every pair reported so far.
    fn detect(&mut self) -> Result<BTreeSet<EventPair>, DetectorError>;

    fn counters(&self) -> OpCounters;

    /// Messages rejected by the detector rather than processed.
    fn drops(&self) -> u64 {
        0
    }
}

/// Keeps the pairs whose readings place one user in two different rooms.
pub fn violation_filter(
    pairs: &BTreeSet<EventPair>,
    readings: &HashMap<EventId, ContextReading>,
) -> BTreeSet<Violation> {
    pairs
        .iter()
        .filter_map(|pair| {
            let a = readings.get(&pair.first())?;
            let b = readings.get(&pair.second())?;
            (a.user == b.user && a.location != b.location).then(|| Violation {
                pair: *pair,
                user: a.user,
                locations: (a.location.clone(), b.location.clone()),
            })
        })
        .collect()
}
