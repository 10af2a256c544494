//! Identifiers shared by the trace, the detectors and the scorer.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a simulated process.
pub type ProcessId = usize;

/// An event, named by its process and its per-process sequence number.
///
/// Ordering is lexicographic on `(process, seq)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct EventId {
    pub process: ProcessId,
    pub seq: usize,
}

impl EventId {
    pub const fn new(process: ProcessId, seq: usize) -> Self {
        Self { process, seq }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}#{}", self.process, self.seq)
    }
}

/// Unordered pair of distinct events, stored as `(min, max)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct EventPair {
    first: EventId,
    second: EventId,
}

impl EventPair {
    /// Canonical pair; `None` when both ids are the same event.
    pub fn new(a: EventId, b: EventId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { first: a, second: b }),
            std::cmp::Ordering::Greater => Some(Self { first: b, second: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> EventId {
        self.first
    }

    pub fn second(&self) -> EventId {
        self.second
    }

    pub fn contains(&self, e: EventId) -> bool {
        self.first == e || self.second == e
    }
}

impl fmt::Display for EventPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.first, self.second)
    }
}

/// One RFID location reading attached to an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextReading {
    pub user: u32,
    /// Location as sensed.
    pub location: String,
    /// Where the user actually was.
    pub true_location: String,
    pub erroneous: bool,
}

impl ContextReading {
    /// Reading whose `erroneous` flag is derived from the two locations.
    pub fn new(user: u32, location: impl Into<String>, true_location: impl Into<String>) -> Self {
        let location = location.into();
        let true_location = true_location.into();
        let erroneous = location != true_location;
        Self {
            user,
            location,
            true_location,
            erroneous,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.erroneous == (self.location != self.true_location)
    }
}

/// Two concurrent readings placing one user in two different rooms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub pair: EventPair,
    pub user: u32,
    pub locations: (String, String),
}
