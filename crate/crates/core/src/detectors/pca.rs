//! Physical-clock baseline: wall-time interval overlap.

use std::collections::{BTreeSet, HashMap};

use crate::clocks::{ClockPayload, Interval, PhysicalStamp};
use crate::event::{EventId, EventPair};
use crate::metrics::OpCounters;

use super::{Detector, DetectorError, DetectorKind, MessageRecord};

/// Every pair of half-open physical intervals that overlap.
///
/// Endpoint sweep: ends sort before starts at equal times, so touching
/// intervals are not reported. Returns the pairs and the number of
/// active-set comparisons made.
pub fn pca_detect(intervals: &[(EventId, Interval<PhysicalStamp>)]) -> (BTreeSet<EventPair>, u64) {
    // (time, is_start, index)
    let mut points: Vec<(u64, bool, usize)> = Vec::with_capacity(intervals.len() * 2);
    for (i, (_, iv)) in intervals.iter().enumerate() {
        points.push((iv.lo.micros, true, i));
        points.push((iv.hi.micros, false, i));
    }
    points.sort_unstable();

    let mut active: BTreeSet<usize> = BTreeSet::new();
    let mut found = BTreeSet::new();
    let mut checks = 0u64;
    for (_, is_start, i) in points {
        if is_start {
            for &j in &active {
                checks += 1;
                if let Some(pair) = EventPair::new(intervals[i].0, intervals[j].0) {
                    found.insert(pair);
                }
            }
            active.insert(i);
        } else {
            active.remove(&i);
        }
    }
    (found, checks)
}

#[derive(Debug, Clone, Default)]
pub struct PcaDetector {
    open: HashMap<EventId, PhysicalStamp>,
    intervals: Vec<(EventId, Interval<PhysicalStamp>)>,
    counters: OpCounters,
}

impl PcaDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[(EventId, Interval<PhysicalStamp>)] {
        &self.intervals
    }
}

impl Detector for PcaDetector {
    type Stamp = PhysicalStamp;

    fn kind(&self) -> DetectorKind {
        DetectorKind::Pca
    }

    fn event_started(&mut self, event: EventId, time_us: u64) -> Result<(), DetectorError> {
        self.counters.events_processed += 1;
        if self.open.insert(event, PhysicalStamp::new(time_us)).is_some() {
            return Err(DetectorError::DuplicateEvent(event));
        }
        Ok(())
    }

    fn event_ended(&mut self, event: EventId, time_us: u64) -> Result<(), DetectorError> {
        self.counters.events_processed += 1;
        let lo = self
            .open
            .remove(&event)
            .ok_or(DetectorError::UnknownEvent(event, event.process))?;
        self.intervals
            .push((event, Interval::new(lo, PhysicalStamp::new(time_us))?));
        Ok(())
    }

    fn message_sent(
        &mut self,
        _from: EventId,
        _to: EventId,
        time_us: u64,
    ) -> Result<PhysicalStamp, DetectorError> {
        self.counters.events_processed += 1;
        let stamp = PhysicalStamp::new(time_us);
        self.counters.stamp_words_sent += stamp.words() as u64;
        Ok(stamp)
    }

    fn message_received(
        &mut self,
        _msg: MessageRecord<PhysicalStamp>,
        _time_us: u64,
    ) -> Result<(), DetectorError> {
        self.counters.events_processed += 1;
        Ok(())
    }

    fn detect(&mut self) -> Result<BTreeSet<EventPair>, DetectorError> {
        let (found, checks) = pca_detect(&self.intervals);
        self.counters.pair_checks += checks;
        Ok(found)
    }

    fn counters(&self) -> OpCounters {
        self.counters
    }
}
