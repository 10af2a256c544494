//! Vector-clock baseline with a central interval checker.
//!
//! Processes tick their vector clock on event start, send, receive and end.
//! Each finished event ships its `[lo, hi]` vector interval to the checker,
//! which reports a pair when each interval's start happened before the
//! other's end. The scan is over all interval pairs.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::clocks::{ClockParams, ClockPayload, Interval, VectorStamp};
use crate::event::{EventId, EventPair};
use crate::metrics::OpCounters;

use super::{Detector, DetectorError, DetectorKind, MessageRecord};

type Stamp = VectorStamp<u64>;

/// Mutual happened-before scan over every pair of vector intervals.
///
/// Returns the detected pairs and the number of pairs examined.
pub fn ceda_detect(
    intervals: &[(EventId, Interval<Stamp>)],
) -> Result<(BTreeSet<EventPair>, u64), DetectorError> {
    if let Some((_, first)) = intervals.first() {
        let n = first.lo.len();
        for (_, iv) in intervals {
            for v in [&iv.lo, &iv.hi] {
                if v.len() != n {
                    return Err(crate::clocks::ClockError::LengthMismatch {
                        left: n,
                        right: v.len(),
                    }
                    .into());
                }
            }
        }
    }
    let mut found = BTreeSet::new();
    let mut checks = 0u64;
    for (j, (ej, ij)) in intervals.iter().enumerate() {
        for (ek, ik) in &intervals[j + 1..] {
            checks += 1;
            if ij.lo.happened_before(&ik.hi) && ik.lo.happened_before(&ij.hi) {
                if let Some(pair) = EventPair::new(*ej, *ek) {
                    found.insert(pair);
                }
            }
        }
    }
    Ok((found, checks))
}

#[derive(Debug, Clone)]
pub struct CedaDetector {
    params: ClockParams,
    clocks: Vec<Stamp>,
    open: HashMap<EventId, Stamp>,
    seen: HashSet<EventId>,
    intervals: Vec<(EventId, Interval<Stamp>)>,
    counters: OpCounters,
}

impl CedaDetector {
    pub fn new(processes: usize, params: ClockParams) -> Self {
        Self {
            params,
            clocks: vec![Stamp::zeros(processes); processes],
            open: HashMap::new(),
            seen: HashSet::new(),
            intervals: Vec::new(),
            counters: OpCounters::default(),
        }
    }

    /// Finished intervals, in completion order.
    pub fn intervals(&self) -> &[(EventId, Interval<Stamp>)] {
        &self.intervals
    }

    pub fn clock(&self, process: usize) -> Option<&Stamp> {
        self.clocks.get(process)
    }

    fn tick(&mut self, process: usize) -> Result<Stamp, DetectorError> {
        let params = self.params;
        let clock = self
            .clocks
            .get_mut(process)
            .ok_or(DetectorError::NoSuchProcess(process))?;
        clock.tick_in_place(process, &params)?;
        self.counters.clock_updates += 1;
        Ok(clock.clone())
    }
}

impl Detector for CedaDetector {
    type Stamp = Stamp;

    fn kind(&self) -> DetectorKind {
        DetectorKind::Ceda
    }

    fn event_started(&mut self, event: EventId, _time_us: u64) -> Result<(), DetectorError> {
        self.counters.events_processed += 1;
        if !self.seen.insert(event) {
            return Err(DetectorError::DuplicateEvent(event));
        }
        let lo = self.tick(event.process)?;
        self.open.insert(event, lo);
        Ok(())
    }

    fn event_ended(&mut self, event: EventId, _time_us: u64) -> Result<(), DetectorError> {
        self.counters.events_processed += 1;
        let lo = self
            .open
            .remove(&event)
            .ok_or(DetectorError::UnknownEvent(event, event.process))?;
        let hi = self.tick(event.process)?;
        self.intervals.push((event, Interval::new(lo, hi)?));
        Ok(())
    }

    fn message_sent(
        &mut self,
        from: EventId,
        _to: EventId,
        _time_us: u64,
    ) -> Result<Stamp, DetectorError> {
        self.counters.events_processed += 1;
        let stamp = self.tick(from.process)?;
        self.counters.stamp_words_sent += stamp.words() as u64;
        Ok(stamp)
    }

    fn message_received(
        &mut self,
        msg: MessageRecord<Stamp>,
        _time_us: u64,
    ) -> Result<(), DetectorError> {
        self.counters.events_processed += 1;
        let owner = msg.to_event.process;
        let params = self.params;
        let clock = self
            .clocks
            .get_mut(owner)
            .ok_or(DetectorError::NoSuchProcess(owner))?;
        *clock = clock.merged(&msg.send_stamp, owner, &params)?;
        self.counters.clock_updates += 1;
        Ok(())
    }

    fn detect(&mut self) -> Result<BTreeSet<EventPair>, DetectorError> {
        let (found, checks) = ceda_detect(&self.intervals)?;
        self.counters.pair_checks += checks;
        Ok(found)
    }

    fn counters(&self) -> OpCounters {
        self.counters
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(s: &[u64]) -> Stamp {
        VectorStamp::from_slots(s.to_vec())
    }

    fn iv(lo: &[u64], hi: &[u64]) -> Interval<Stamp> {
        Interval::new(vs(lo), vs(hi)).unwrap()
    }

    const J: EventId = EventId::new(0, 0);
    const K: EventId = EventId::new(1, 0);

    #[test]
    fn mutual_overlap_is_reported() {
        // j starts, sends to k; k starts, sends to j; both end after the receipts
        let intervals = vec![(J, iv(&[1, 0], &[4, 3])), (K, iv(&[0, 1], &[3, 4]))];
        let (found, checks) = ceda_detect(&intervals).unwrap();
        assert_eq!(found, EventPair::new(J, K).into_iter().collect());
        assert_eq!(checks, 1);
    }

    #[test]
    fn one_sided_knowledge_is_missed() {
        // j.lo -> k.hi holds, k.lo -> j.hi does not
        let intervals = vec![(J, iv(&[1, 0], &[3, 0])), (K, iv(&[0, 1], &[2, 3]))];
        assert!(ceda_detect(&intervals).unwrap().0.is_empty());
    }

    #[test]
    fn ordered_intervals_are_not_reported() {
        let intervals = vec![(J, iv(&[1, 0], &[3, 0])), (K, iv(&[3, 1], &[3, 2]))];
        assert!(ceda_detect(&intervals).unwrap().0.is_empty());
    }

    #[test]
    fn length_mismatch_is_structural() {
        let intervals = vec![(J, iv(&[1, 0], &[3, 0])), (K, iv(&[0, 1, 0], &[0, 2, 0]))];
        assert!(matches!(
            ceda_detect(&intervals),
            Err(DetectorError::Clock(_))
        ));
    }

    #[test]
    fn pair_checks_are_quadratic_in_intervals() {
        let intervals: Vec<_> = (0..10)
            .map(|i| (EventId::new(0, i), iv(&[2 * i as u64 + 1], &[2 * i as u64 + 2])))
            .collect();
        assert_eq!(ceda_detect(&intervals).unwrap().1, 45);
    }

    #[test]
    fn driver_round_trip() {
        let mut d = CedaDetector::new(2, ClockParams::default());
        d.event_started(J, 0).unwrap();
        d.event_started(K, 1).unwrap();
        let to_k = d.message_sent(J, K, 2).unwrap();
        let to_j = d.message_sent(K, J, 2).unwrap();
        assert_eq!(to_k, vs(&[2, 0]));
        d.message_received(MessageRecord { from_event: J, to_event: K, send_stamp: to_k, payload: None }, 3).unwrap();
        d.message_received(MessageRecord { from_event: K, to_event: J, send_stamp: to_j, payload: None }, 3).unwrap();
        d.event_ended(J, 10).unwrap();
        d.event_ended(K, 10).unwrap();
        assert_eq!(d.detect().unwrap().len(), 1);
        let c = d.counters();
        assert_eq!(c.events_processed, 8);
        assert_eq!(c.stamp_words_sent, 4);
        assert_eq!(c.pair_checks, 1);
        assert_eq!(d.event_ended(J, 11), Err(DetectorError::UnknownEvent(J, 0)));
    }
}
