//! Deterministic workload generation, ground truth and trace replay.
//!
//! A smart-building workload: every node runs `instances_per_node` detection
//! processes, each observing a back-to-back sequence of short RFID reading
//! events. Users move between rooms with exponentially distributed stays,
//! readings are corrupted at a controlled rate, and every event announces
//! itself to each peer process with a point-to-point message whose delay is
//! sampled from the configured range.
//!
//! All randomness flows from one seed through independent ChaCha streams
//! (layout, mobility, user assignment, corruption, wiring, delays), so
//! changing the error rate or the delay range leaves the event layout intact.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocks::ClockParams;
use crate::detectors::{
    violation_filter, CedaDetector, Detector, DetectorError, DetectorKind, MessageRecord,
    MessageRef, Notification, NotificationKind, PcaDetector, SecaDetector,
};
use crate::event::{ContextReading, EventId, EventPair, Violation};
use crate::metrics::{score, AccuracyReport, OpCounters};

pub mod trace;

pub use trace::{Trace, TraceError, TraceEvent, TraceMessage};

/// Delay resamples attempted before a message with no live receiver is dropped.
pub const MAX_DELAY_RESAMPLES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// Workload parameters. Durations carry their unit in the field name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub nodes: usize,
    pub instances_per_node: usize,
    /// Inclusive `[min, max]` event lifespan.
    pub event_lifespan_ms: (f64, f64),
    /// Inclusive `[min, max]` idle time between consecutive events of a process.
    pub event_gap_ms: (f64, f64),
    /// Inclusive `[min, max]` one-way message delay.
    pub message_delay_ms: (f64, f64),
    /// Transmit time per message when an event fans out to its peers.
    pub send_gap_us: u64,
    pub error_rate: f64,
    pub stay_mean_ms: f64,
    pub events_per_process: usize,
    pub users: u32,
    pub rooms: u32,
    pub seed: u64,
    pub clock: ClockParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nodes: 5,
            instances_per_node: 2,
            event_lifespan_ms: (20.0, 50.0),
            event_gap_ms: (0.0, 5.0),
            message_delay_ms: (0.25, 8.0),
            send_gap_us: 200,
            error_rate: 0.1,
            stay_mean_ms: 60_000.0,
            events_per_process: 50,
            users: 4,
            rooms: 8,
            seed: 0,
            clock: ClockParams::default(),
        }
    }
}

fn ms_to_us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

fn check_range(field: &'static str, (lo, hi): (f64, f64)) -> Result<(), ConfigError> {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
        return Err(ConfigError {
            field,
            reason: format!("expected 0 <= min <= max, got [{lo}, {hi}]"),
        });
    }
    Ok(())
}

impl SimConfig {
    pub fn processes(&self) -> usize {
        self.nodes * self.instances_per_node
    }

    pub fn lifespan_us(&self) -> (u64, u64) {
        (ms_to_us(self.event_lifespan_ms.0), ms_to_us(self.event_lifespan_ms.1))
    }

    pub fn gap_us(&self) -> (u64, u64) {
        (ms_to_us(self.event_gap_ms.0), ms_to_us(self.event_gap_ms.1))
    }

    pub fn delay_us(&self) -> (u64, u64) {
        (ms_to_us(self.message_delay_ms.0), ms_to_us(self.message_delay_ms.1))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |field, reason: &str| {
            Err(ConfigError {
                field,
                reason: reason.to_string(),
            })
        };
        if !(2..=1000).contains(&self.nodes) {
            return fail("nodes", "must lie in 2..=1000");
        }
        if self.instances_per_node == 0 {
            return fail("instances_per_node", "must be at least 1");
        }
        check_range("event_lifespan_ms", self.event_lifespan_ms)?;
        if self.lifespan_us().0 == 0 {
            return fail("event_lifespan_ms", "minimum must be at least 1 microsecond");
        }
        check_range("event_gap_ms", self.event_gap_ms)?;
        check_range("message_delay_ms", self.message_delay_ms)?;
        if !(0.0..1.0).contains(&self.error_rate) {
            return fail("error_rate", "must lie in [0, 1)");
        }
        if !(self.stay_mean_ms.is_finite() && self.stay_mean_ms > 0.0) {
            return fail("stay_mean_ms", "must be positive");
        }
        if self.events_per_process == 0 {
            return fail("events_per_process", "must be at least 1");
        }
        if self.users == 0 {
            return fail("users", "must be at least 1");
        }
        if self.rooms < 2 {
            return fail("rooms", "must be at least 2");
        }
        if self.clock.d == 0 {
            return fail("clock", "increment d must be positive");
        }
        Ok(())
    }
}

#[repr(u64)]
#[derive(Clone, Copy)]
enum Stream {
    Layout = 1,
    Mobility = 2,
    Users = 3,
    Errors = 4,
    Wiring = 5,
    Delays = 6,
}

fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

fn room_name(index: u32) -> String {
    format!("R{}", 101 + index)
}

/// Piecewise-constant room occupancy of one user.
struct Itinerary {
    /// `(stay start µs, room index)`, sorted by start.
    stays: Vec<(u64, u32)>,
}

impl Itinerary {
    fn room_at(&self, t_us: u64) -> u32 {
        let i = self.stays.partition_point(|&(start, _)| start <= t_us);
        self.stays[i.saturating_sub(1)].1
    }
}

fn itineraries(config: &SimConfig, horizon_us: u64) -> Vec<Itinerary> {
    let mut rng = stream(config.seed, Stream::Mobility);
    let stay = Exp::new(1.0 / (config.stay_mean_ms * 1000.0)).expect("positive rate");
    (0..config.users)
        .map(|_| {
            let mut room = rng.random_range(0..config.rooms);
            let mut t = 0u64;
            let mut stays = vec![(0, room)];
            loop {
                t += (stay.sample(&mut rng) as u64).max(1);
                if t > horizon_us {
                    break;
                }
                // uniform over the other rooms
                let step = rng.random_range(1..config.rooms);
                room = (room + step) % config.rooms;
                stays.push((t, room));
            }
            Itinerary { stays }
        })
        .collect()
}

/// Generates the workload described by `config`. Deterministic in the config.
pub fn generate_trace(config: &SimConfig) -> Result<Trace, ConfigError> {
    config.validate()?;
    let procs = config.processes();
    let (life_lo, life_hi) = config.lifespan_us();
    let (gap_lo, gap_hi) = config.gap_us();

    let mut layout = stream(config.seed, Stream::Layout);
    let mut per_process: Vec<Vec<(u64, u64)>> = Vec::with_capacity(procs);
    for _ in 0..procs {
        let mut t = layout.random_range(0..=life_hi);
        let mut spans = Vec::with_capacity(config.events_per_process);
        for seq in 0..config.events_per_process {
            if seq > 0 {
                t += layout.random_range(gap_lo..=gap_hi);
            }
            let life = layout.random_range(life_lo..=life_hi);
            spans.push((t, t + life));
            t += life;
        }
        per_process.push(spans);
    }
    let horizon = per_process
        .iter()
        .filter_map(|s| s.last().map(|&(_, end)| end))
        .max()
        .unwrap_or(0);

    let users = itineraries(config, horizon);
    let mut who = stream(config.seed, Stream::Users);
    let mut noise = stream(config.seed, Stream::Errors);
    let mut events = Vec::with_capacity(procs * config.events_per_process);
    for (p, spans) in per_process.iter().enumerate() {
        for (seq, &(start_us, end_us)) in spans.iter().enumerate() {
            let user = who.random_range(0..config.users);
            let truth = users[user as usize].room_at(start_us);
            // both draws happen every time so the stream stays aligned across error rates
            let corrupt = noise.random::<f64>() < config.error_rate;
            let other = (truth + noise.random_range(1..config.rooms)) % config.rooms;
            let sensed = if corrupt { other } else { truth };
            events.push(TraceEvent {
                id: EventId::new(p, seq),
                start_us,
                end_us,
                reading: Some(ContextReading::new(user, room_name(sensed), room_name(truth))),
            });
        }
    }

    let (delay_lo, delay_hi) = config.delay_us();
    let mut wiring = stream(config.seed, Stream::Wiring);
    let mut delays = stream(config.seed, Stream::Delays);
    let mut messages = Vec::new();
    let mut generation_drops = 0u64;
    let mut peers: Vec<usize> = Vec::with_capacity(procs);
    for e in &events {
        peers.clear();
        peers.extend((0..procs).filter(|&q| q != e.id.process));
        peers.shuffle(&mut wiring);
        for (k, &q) in peers.iter().enumerate() {
            let send_us = e.start_us + k as u64 * config.send_gap_us;
            if send_us >= e.end_us {
                generation_drops += 1;
                continue;
            }
            let target = (0..=MAX_DELAY_RESAMPLES).find_map(|_| {
                let deliver_us = send_us + delays.random_range(delay_lo..=delay_hi);
                live_event(&per_process[q], deliver_us).map(|seq| (seq, deliver_us))
            });
            match target {
                Some((seq, deliver_us)) => messages.push(TraceMessage {
                    from: e.id,
                    to: EventId::new(q, seq),
                    send_us,
                    deliver_us,
                }),
                None => generation_drops += 1,
            }
        }
    }

    Ok(Trace {
        config: config.clone(),
        events,
        messages,
        generation_drops,
    })
}

fn live_event(spans: &[(u64, u64)], t_us: u64) -> Option<usize> {
    let i = spans.partition_point(|&(start, _)| start <= t_us);
    let candidate = i.checked_sub(1)?;
    (t_us < spans[candidate].1).then_some(candidate)
}

/// What a perfect observer would report for a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub concurrent_pairs: BTreeSet<EventPair>,
    pub violations: BTreeSet<Violation>,
}

/// Wall-overlap pairs by sorting on start time and scanning forward.
pub fn ground_truth(trace: &Trace) -> GroundTruth {
    let mut by_start: Vec<&TraceEvent> = trace.events.iter().collect();
    by_start.sort_by_key(|e| (e.start_us, e.id));
    let mut concurrent_pairs = BTreeSet::new();
    for (i, a) in by_start.iter().enumerate() {
        for b in by_start[i + 1..].iter().take_while(|b| b.start_us < a.end_us) {
            if let Some(pair) = EventPair::new(a.id, b.id) {
                concurrent_pairs.insert(pair);
            }
        }
    }
    let violations = violation_filter(&concurrent_pairs, &trace.readings());
    GroundTruth {
        concurrent_pairs,
        violations,
    }
}

/// Signed wall overlap of two events in microseconds (negative when apart).
pub fn wall_overlap_us(trace: &Trace, pair: &EventPair) -> Option<i64> {
    let a = trace.event(pair.first())?;
    let b = trace.event(pair.second())?;
    Some(a.end_us.min(b.end_us) as i64 - a.start_us.max(b.start_us) as i64)
}

/// Scores a run against the ground truth, with overlap margins of missed pairs.
pub fn score_against(
    trace: &Trace,
    truth: &GroundTruth,
    detected: &BTreeSet<EventPair>,
) -> AccuracyReport<f64> {
    score(detected, &truth.concurrent_pairs, |p| wall_overlap_us(trace, p))
}

fn kind_rank(kind: NotificationKind) -> u8 {
    match kind {
        NotificationKind::LocalEnd => 0,
        NotificationKind::LocalEvent => 1,
        NotificationKind::Send => 2,
        NotificationKind::Receive => 3,
    }
}

/// The trace as a totally ordered notification sequence.
///
/// Ordered by wall time; at equal times ends precede starts, starts precede
/// sends and sends precede receives; remaining ties fall back to
/// `(process, event, message index)`.
pub fn replay_schedule(trace: &Trace) -> Vec<Notification> {
    let mut notes = Vec::with_capacity(2 * trace.events.len() + 2 * trace.messages.len());
    for e in &trace.events {
        for (kind, time_us) in [
            (NotificationKind::LocalEvent, e.start_us),
            (NotificationKind::LocalEnd, e.end_us),
        ] {
            notes.push(Notification {
                kind,
                at: e.id.process,
                event: e.id,
                time_us,
                msg: None,
            });
        }
    }
    for (index, m) in trace.messages.iter().enumerate() {
        let r = MessageRef {
            index,
            from_event: m.from,
            to_event: m.to,
        };
        notes.push(Notification {
            kind: NotificationKind::Send,
            at: m.from.process,
            event: m.from,
            time_us: m.send_us,
            msg: Some(r),
        });
        notes.push(Notification {
            kind: NotificationKind::Receive,
            at: m.to.process,
            event: m.to,
            time_us: m.deliver_us,
            msg: Some(r),
        });
    }
    notes.sort_by_key(|n| {
        (
            n.time_us,
            kind_rank(n.kind),
            n.at,
            n.event,
            n.msg.map(|m| m.index),
        )
    });
    notes
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// A run with more detector drops than this is flagged degraded.
    pub drop_threshold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub detector: DetectorKind,
    pub detected: BTreeSet<EventPair>,
    pub violations: BTreeSet<Violation>,
    pub counters: OpCounters,
    pub drops: u64,
    pub degraded: bool,
}

/// Feeds `schedule` to `detector` and collects its verdict. The detector is
/// left drained, so its state can be inspected afterwards.
pub fn replay<D: Detector>(
    detector: &mut D,
    trace: &Trace,
    schedule: &[Notification],
    readings: &HashMap<EventId, ContextReading>,
    opts: &RunOptions,
) -> Result<RunResult, DetectorError> {
    let mut in_flight: Vec<Option<D::Stamp>> = vec![None; trace.messages.len()];
    for n in schedule {
        match n.kind {
            NotificationKind::LocalEvent => detector.event_started(n.event, n.time_us)?,
            NotificationKind::LocalEnd => detector.event_ended(n.event, n.time_us)?,
            NotificationKind::Send => {
                let m = n.msg.expect("send carries a message");
                let stamp = detector.message_sent(m.from_event, m.to_event, n.time_us)?;
                in_flight[m.index] = Some(stamp);
            }
            NotificationKind::Receive => {
                let m = n.msg.expect("receive carries a message");
                let send_stamp = in_flight[m.index]
                    .take()
                    .expect("send is replayed before its receive");
                detector.message_received(
                    MessageRecord {
                        from_event: m.from_event,
                        to_event: m.to_event,
                        send_stamp,
                        payload: readings.get(&m.from_event).cloned(),
                    },
                    n.time_us,
                )?;
            }
        }
    }
    let detected = detector.detect()?;
    let violations = violation_filter(&detected, readings);
    let drops = detector.drops();
    Ok(RunResult {
        detector: detector.kind(),
        detected,
        violations,
        counters: detector.counters(),
        drops,
        degraded: drops > opts.drop_threshold,
    })
}

/// Replays `trace` through one detector family.
pub fn run_trace(
    trace: &Trace,
    detector: DetectorKind,
    opts: &RunOptions,
) -> Result<RunResult, SimError> {
    let schedule = replay_schedule(trace);
    let readings = trace.readings();
    let procs = trace.processes();
    let params = trace.config.clock;
    let result = match detector {
        DetectorKind::Seca => replay(&mut SecaDetector::new(procs, params), trace, &schedule, &readings, opts),
        DetectorKind::Ceda => replay(&mut CedaDetector::new(procs, params), trace, &schedule, &readings, opts),
        DetectorKind::Pca => replay(&mut PcaDetector::new(), trace, &schedule, &readings, opts),
    }?;
    Ok(result)
}
