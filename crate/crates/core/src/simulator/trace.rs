//! Generated workloads and their line-delimited JSON form.
//!
//! A trace file holds one JSON object per line. The first line is a header
//! carrying the generating config; every other line is an event or a
//! message:
//!
//! ```text
//! {"kind":"header","config":{...},"generation_drops":0}
//! {"kind":"event","id":{"process":0,"seq":0},"start_us":0,"end_us":40000,"reading":null}
//! {"kind":"message","from":{"process":1,"seq":0},"to":{"process":0,"seq":0},"send_us":10000,"deliver_us":30000}
//! ```

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{ContextReading, EventId, ProcessId};

use super::SimConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub id: EventId,
    pub start_us: u64,
    pub end_us: u64,
    pub reading: Option<ContextReading>,
}

impl TraceEvent {
    pub fn process(&self) -> ProcessId {
        self.id.process
    }

    pub fn is_live_at(&self, t_us: u64) -> bool {
        self.start_us <= t_us && t_us < self.end_us
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMessage {
    pub from: EventId,
    pub to: EventId,
    pub send_us: u64,
    pub deliver_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: SimConfig,
    /// Sorted by `(process, seq)`.
    pub events: Vec<TraceEvent>,
    pub messages: Vec<TraceMessage>,
    /// Messages the generator gave up on (no live receiver, or fan-out overran the event).
    pub generation_drops: u64,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("trace has no header line")]
    MissingHeader,
    #[error("malformed trace: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header {
        config: SimConfig,
        #[serde(default)]
        generation_drops: u64,
    },
    Event(TraceEvent),
    Message(TraceMessage),
}

impl Trace {
    pub fn processes(&self) -> usize {
        self.config.processes()
    }

    pub fn event(&self, id: EventId) -> Option<&TraceEvent> {
        let i = self.events.binary_search_by_key(&id, |e| e.id).ok()?;
        Some(&self.events[i])
    }

    pub fn readings(&self) -> HashMap<EventId, ContextReading> {
        self.events
            .iter()
            .filter_map(|e| e.reading.clone().map(|r| (e.id, r)))
            .collect()
    }

    /// Wall span of the whole trace in microseconds.
    pub fn span_us(&self) -> u64 {
        let start = self.events.iter().map(|e| e.start_us).min().unwrap_or(0);
        let end = self.events.iter().map(|e| e.end_us).max().unwrap_or(0);
        end - start
    }

    /// Checks every structural invariant a replay depends on.
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |s: String| Err(TraceError::Invalid(s));
        let procs = self.processes();
        let mut seen = HashSet::new();
        let mut last: HashMap<ProcessId, &TraceEvent> = HashMap::new();
        for w in self.events.windows(2) {
            if w[0].id >= w[1].id {
                return bad(format!("events out of (process, seq) order at {}", w[1].id));
            }
        }
        for e in &self.events {
            if e.id.process >= procs {
                return bad(format!("event {} names a process beyond {procs}", e.id));
            }
            if !seen.insert(e.id) {
                return bad(format!("duplicate event {}", e.id));
            }
            if e.start_us >= e.end_us {
                return bad(format!("event {} has an empty wall span", e.id));
            }
            if let Some(r) = &e.reading {
                if !r.is_consistent() {
                    return bad(format!("event {} has an inconsistent error flag", e.id));
                }
            }
            match last.get(&e.id.process) {
                None if e.id.seq != 0 => {
                    return bad(format!("event {} does not start at seq 0", e.id));
                }
                Some(prev) if prev.id.seq + 1 != e.id.seq => {
                    return bad(format!("event {} skips a sequence number", e.id));
                }
                Some(prev) if prev.end_us > e.start_us => {
                    return bad(format!("events {} and {} overlap", prev.id, e.id));
                }
                _ => {}
            }
            last.insert(e.id.process, e);
        }
        for (i, m) in self.messages.iter().enumerate() {
            let (Some(from), Some(to)) = (self.event(m.from), self.event(m.to)) else {
                return bad(format!("message {i} names an unknown event"));
            };
            if m.from.process == m.to.process {
                return bad(format!("message {i} does not cross processes"));
            }
            if !from.is_live_at(m.send_us) {
                return bad(format!("message {i} is sent outside {}", m.from));
            }
            if m.deliver_us < m.send_us {
                return bad(format!("message {i} is delivered before it is sent"));
            }
            if !to.is_live_at(m.deliver_us) {
                return bad(format!("message {i} is delivered outside {}", m.to));
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        let header = Record::Header {
            config: self.config.clone(),
            generation_drops: self.generation_drops,
        };
        serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut out, &Record::Event(e.clone()))
                .map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        for m in &self.messages {
            serde_json::to_writer(&mut out, &Record::Message(m.clone()))
                .map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses and validates a trace. Blank lines and `//` comment lines are skipped.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut header = None;
        let mut events = Vec::new();
        let mut messages = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with("//") {
                continue;
            }
            let record: Record = serde_json::from_str(text)
                .map_err(|source| TraceError::Parse { line: i + 1, source })?;
            match record {
                Record::Header { config, generation_drops } => {
                    if header.is_some() {
                        return Err(TraceError::Record {
                            line: i + 1,
                            reason: "second header".into(),
                        });
                    }
                    header = Some((config, generation_drops));
                }
                Record::Event(e) => events.push(e),
                Record::Message(m) => messages.push(m),
            }
        }
        let (config, generation_drops) = header.ok_or(TraceError::MissingHeader)?;
        events.sort_by_key(|e| e.id);
        let trace = Trace {
            config,
            events,
            messages,
            generation_drops,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self, TraceError> {
        Self::read_jsonl(text.as_bytes())
    }
}
