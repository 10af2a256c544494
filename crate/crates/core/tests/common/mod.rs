#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

use seca_core::simulator::{Trace, TraceEvent};
use seca_core::{EventId, EventPair};

pub fn fixture(name: &str) -> Trace {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    let text = std::fs::read_to_string(&path).expect("fixture readable");
    Trace::from_jsonl_str(&text).expect("fixture parses")
}

/// Overlap by the definition: some instant lies in both half-open spans.
pub fn brute_overlaps(trace: &Trace) -> BTreeSet<EventPair> {
    let mut out = BTreeSet::new();
    for a in &trace.events {
        for b in &trace.events {
            if a.id < b.id && a.start_us.max(b.start_us) < a.end_us.min(b.end_us) {
                out.insert(EventPair::new(a.id, b.id).unwrap());
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Point {
    Start(EventId),
    End(EventId),
    Send(usize),
    Recv(usize),
}

/// Causal graph over the trace's points: program order on each process plus
/// one edge per message.
pub struct Causality {
    index: HashMap<Point, usize>,
    reach: Vec<Vec<bool>>,
}

impl Causality {
    pub fn new(trace: &Trace) -> Self {
        // (process, time, rank, point); rank orders coincident points on one process
        let mut local: Vec<(usize, u64, u8, Point)> = Vec::new();
        let ev = |e: &TraceEvent| e.id.process;
        for e in &trace.events {
            local.push((ev(e), e.start_us, 1, Point::Start(e.id)));
            local.push((ev(e), e.end_us, 0, Point::End(e.id)));
        }
        for (i, m) in trace.messages.iter().enumerate() {
            local.push((m.from.process, m.send_us, 2, Point::Send(i)));
            local.push((m.to.process, m.deliver_us, 3, Point::Recv(i)));
        }
        local.sort_by_key(|&(p, t, r, _)| (p, t, r));
        let index: HashMap<Point, usize> =
            local.iter().enumerate().map(|(i, x)| (x.3, i)).collect();
        let n = local.len();
        let mut succ = vec![Vec::new(); n];
        for i in 1..n {
            if local[i - 1].0 == local[i].0 {
                succ[i - 1].push(i);
            }
        }
        for i in 0..trace.messages.len() {
            succ[index[&Point::Send(i)]].push(index[&Point::Recv(i)]);
        }
        let reach = (0..n)
            .map(|s| {
                let mut seen = vec![false; n];
                let mut queue: VecDeque<usize> = succ[s].iter().copied().collect();
                while let Some(v) = queue.pop_front() {
                    if !seen[v] {
                        seen[v] = true;
                        queue.extend(succ[v].iter().copied());
                    }
                }
                seen
            })
            .collect();
        Self { index, reach }
    }

    /// Strict happened-before between two points.
    pub fn before(&self, a: Point, b: Point) -> bool {
        self.reach[self.index[&a]][self.index[&b]]
    }
}
