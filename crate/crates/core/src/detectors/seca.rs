//! Snapshot-clock event detection.
//!
//! Each process owns a [`SecaProcess`]: its scalar clock, replicas of every
//! process's event queue (`eq`) and interval queue (`iq`), the queue of
//! communicating event pairs (`ee`) and the set of detected pairs (`out`).
//!
//! Event occurrence ticks the clock and broadcasts the new stamp so that
//! peers can maintain their replicas. A message receipt re-stamps the
//! sender's replica, widens the receiver's interval and queues the pair.
//! Detection then keeps a queued pair `(c, b, x)` when both events are valid
//! and `c.lo <= x < c.hi`, where `x` is the stamp `b` sent.

use std::collections::{BTreeSet, VecDeque};

use crate::clocks::{ClockParams, ClockPayload, Interval, SnapshotStamp};
use crate::event::{EventId, EventPair, ProcessId};
use crate::metrics::OpCounters;

use super::{Detector, DetectorError, DetectorKind, MessageRecord};

type Stamp = SnapshotStamp<u64>;

/// Payload of the occurrence broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Broadcast {
    pub origin: ProcessId,
    pub event: EventId,
    pub stamp: Stamp,
}

impl ClockPayload for Broadcast {
    fn words(&self) -> usize {
        self.stamp.words()
    }
}

/// A communicating pair awaiting the consistency check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingPair {
    pub receiver: EventId,
    pub sender: EventId,
    pub x: Stamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct IqEntry {
    event: EventId,
    interval: Interval<Stamp>,
}

/// Per-process detector state.
#[derive(Debug, Clone)]
pub struct SecaProcess {
    me: ProcessId,
    params: ClockParams,
    clock: Stamp,
    eq: Vec<Vec<(EventId, Stamp)>>,
    // entries kept sorted by seq; broadcasts arrive in occurrence order
    iq: Vec<Vec<IqEntry>>,
    ee: VecDeque<PendingPair>,
    out: BTreeSet<EventPair>,
    counters: OpCounters,
}

fn exclusive_bound(s: Stamp) -> Stamp {
    SnapshotStamp::new(s.tick.checked_add(1).expect("logical clock overflow"))
}

impl SecaProcess {
    pub fn new(me: ProcessId, processes: usize, params: ClockParams) -> Self {
        Self {
            me,
            params,
            clock: Stamp::zero(),
            eq: vec![Vec::new(); processes],
            iq: vec![Vec::new(); processes],
            ee: VecDeque::new(),
            out: BTreeSet::new(),
            counters: OpCounters::default(),
        }
    }

    pub fn id(&self) -> ProcessId {
        self.me
    }

    pub fn clock(&self) -> Stamp {
        self.clock
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingPair> {
        self.ee.iter()
    }

    /// Latest `eq` entry held for `process`.
    pub fn top(&self, process: ProcessId) -> Option<(EventId, Stamp)> {
        self.eq.get(process)?.last().copied()
    }

    /// The interval recorded for `event`, local or replicated.
    pub fn interval(&self, event: EventId) -> Option<&Interval<Stamp>> {
        self.locate(event).map(|i| &self.iq[event.process][i].interval)
    }

    fn locate(&self, event: EventId) -> Option<usize> {
        let queue = self.iq.get(event.process)?;
        queue
            .binary_search_by_key(&event.seq, |entry| entry.event.seq)
            .ok()
    }

    fn push_interval(&mut self, event: EventId, lo: Stamp) -> Result<(), DetectorError> {
        let queue = self
            .iq
            .get_mut(event.process)
            .ok_or(DetectorError::NoSuchProcess(event.process))?;
        if queue.last().is_some_and(|e| e.event.seq >= event.seq) {
            return Err(DetectorError::DuplicateEvent(event));
        }
        queue.push(IqEntry {
            event,
            interval: Interval::new(lo, exclusive_bound(lo))?,
        });
        Ok(())
    }

    /// A local event occurs: tick, record it, and return the broadcast.
    pub fn on_local_event(&mut self, event: EventId) -> Result<Broadcast, DetectorError> {
        if event.process != self.me {
            return Err(DetectorError::WrongProcess(event, self.me));
        }
        let next = self.clock.ticked(&self.params);
        self.push_interval(event, next)?;
        self.clock = next;
        self.eq[self.me].push((event, next));
        self.counters.clock_updates += 1;
        let payload = Broadcast {
            origin: self.me,
            event,
            stamp: next,
        };
        self.counters.stamp_words_sent += payload.words() as u64;
        Ok(payload)
    }

    /// Records a peer's occurrence broadcast and merges its stamp.
    pub fn on_broadcast(&mut self, payload: &Broadcast) -> Result<(), DetectorError> {
        if payload.origin == self.me || payload.event.process != payload.origin {
            return Err(DetectorError::WrongProcess(payload.event, payload.origin));
        }
        self.push_interval(payload.event, payload.stamp)?;
        self.eq[payload.origin].push((payload.event, payload.stamp));
        self.clock = self.clock.merged_with(payload.stamp, &self.params);
        self.counters.clock_updates += 1;
        Ok(())
    }

    /// Stamp piggybacked on messages sent on behalf of `event`: the stamp its
    /// occurrence was announced with.
    pub fn send_stamp(&self, event: EventId) -> Result<Stamp, DetectorError> {
        if event.process != self.me {
            return Err(DetectorError::WrongProcess(event, self.me));
        }
        self.interval(event)
            .map(|iv| iv.lo)
            .ok_or(DetectorError::UnknownEvent(event, self.me))
    }

    /// Handles a point-to-point message addressed to one of this process's events.
    ///
    /// Fails with [`DetectorError::UnknownSender`] when the sender's event has
    /// not been replicated here; nothing is modified in that case.
    pub fn on_message(&mut self, msg: &MessageRecord<Stamp>) -> Result<(), DetectorError> {
        let receiver = msg.to_event;
        let sender = msg.from_event;
        if receiver.process != self.me {
            return Err(DetectorError::WrongProcess(receiver, self.me));
        }
        let own = self
            .locate(receiver)
            .ok_or(DetectorError::UnknownEvent(receiver, self.me))?;
        let theirs = self
            .locate(sender)
            .ok_or(DetectorError::UnknownSender(sender))?;
        let j = sender.process;

        // re-stamp the sender's replica one tick past its latest entry
        let (_, top) = self.eq[j].last().copied().expect("replica entry exists");
        let shadow = top.ticked(&self.params);
        self.eq[j].push((sender, shadow));
        let sender_iv = &mut self.iq[j][theirs].interval;
        sender_iv.hi = sender_iv.hi.max(exclusive_bound(shadow));

        self.clock = self.clock.merged_with(shadow, &self.params);
        let own_iv = &mut self.iq[self.me][own].interval;
        own_iv.hi = own_iv.hi.max(shadow);
        self.counters.clock_updates += 2;

        self.ee.push_back(PendingPair {
            receiver,
            sender,
            x: msg.send_stamp,
        });
        Ok(())
    }

    fn is_valid(&self, event: EventId) -> bool {
        self.interval(event).is_some_and(|iv| iv.is_well_formed())
    }

    /// Drains the pending pairs and returns every pair detected so far.
    pub fn check_consistency(&mut self) -> BTreeSet<EventPair> {
        while let Some(p) = self.ee.pop_front() {
            self.counters.pair_checks += 1;
            if !(self.is_valid(p.receiver) && self.is_valid(p.sender)) {
                continue;
            }
            let concurrent = self
                .interval(p.receiver)
                .is_some_and(|iv| iv.contains(p.x));
            if concurrent {
                if let Some(pair) = EventPair::new(p.receiver, p.sender) {
                    self.out.insert(pair);
                }
            }
        }
        self.out.clone()
    }

    #[cfg(test)]
    fn force_interval(&mut self, event: EventId, lo: u64, hi: u64) {
        let i = self.locate(event).expect("event present");
        self.iq[event.process][i].interval = Interval::new(Stamp::new(lo), Stamp::new(hi)).unwrap();
    }

    #[cfg(test)]
    fn enqueue(&mut self, receiver: EventId, sender: EventId, x: u64) {
        self.ee.push_back(PendingPair {
            receiver,
            sender,
            x: Stamp::new(x),
        });
    }
}

/// All processes' SECA states plus the broadcast primitive connecting them.
///
/// Broadcasts are delivered to every peer immediately and in order.
#[derive(Debug, Clone)]
pub struct SecaDetector {
    processes: Vec<SecaProcess>,
    driver: OpCounters,
    drops: u64,
}

impl SecaDetector {
    pub fn new(processes: usize, params: ClockParams) -> Self {
        Self {
            processes: (0..processes)
                .map(|p| SecaProcess::new(p, processes, params))
                .collect(),
            driver: OpCounters::default(),
            drops: 0,
        }
    }

    pub fn process(&self, p: ProcessId) -> Option<&SecaProcess> {
        self.processes.get(p)
    }

    fn state_mut(&mut self, p: ProcessId) -> Result<&mut SecaProcess, DetectorError> {
        self.processes
            .get_mut(p)
            .ok_or(DetectorError::NoSuchProcess(p))
    }
}

impl Detector for SecaDetector {
    type Stamp = Stamp;

    fn kind(&self) -> DetectorKind {
        DetectorKind::Seca
    }

    fn event_started(&mut self, event: EventId, _time_us: u64) -> Result<(), DetectorError> {
        self.driver.events_processed += 1;
        let payload = self.state_mut(event.process)?.on_local_event(event)?;
        for peer in self.processes.iter_mut().filter(|p| p.me != payload.origin) {
            peer.on_broadcast(&payload)?;
        }
        Ok(())
    }

    fn event_ended(&mut self, event: EventId, _time_us: u64) -> Result<(), DetectorError> {
        self.driver.events_processed += 1;
        self.state_mut(event.process)?;
        Ok(())
    }

    fn message_sent(
        &mut self,
        from: EventId,
        _to: EventId,
        _time_us: u64,
    ) -> Result<Stamp, DetectorError> {
        self.driver.events_processed += 1;
        let stamp = self.state_mut(from.process)?.send_stamp(from)?;
        self.driver.stamp_words_sent += stamp.words() as u64;
        Ok(stamp)
    }

    fn message_received(
        &mut self,
        msg: MessageRecord<Stamp>,
        _time_us: u64,
    ) -> Result<(), DetectorError> {
        self.driver.events_processed += 1;
        match self.state_mut(msg.to_event.process)?.on_message(&msg) {
            Err(DetectorError::UnknownSender(_)) => {
                self.drops += 1;
                Ok(())
            }
            other => other,
        }
    }

    fn detect(&mut self) -> Result<BTreeSet<EventPair>, DetectorError> {
        let mut all = BTreeSet::new();
        for p in &mut self.processes {
            all.extend(p.check_consistency());
        }
        Ok(all)
    }

    fn counters(&self) -> OpCounters {
        let mut total = self.driver;
        for p in &self.processes {
            total += p.counters;
        }
        total
    }

    fn drops(&self) -> u64 {
        self.drops
    }
}
