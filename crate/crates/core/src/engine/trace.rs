//! Line-delimited execution traces.
//!
//! ```text
//! kind,round,phase,ministep,node,in_transit,delivered,l0,l1,...
//! parent,,,,,,,1,2,
//! state,0,start,0,,0,0,0,0,0
//! state,1,inject,1,0,0,0,1,0,0
//! state,1,forward1,2,,1,0,0,0,0
//! state,1,end,2,,0,0,0,1,0
//! check,3,forward1,9,invariant-i,fail,<details>
//! ```
//!
//! The `parent` row gives each node's parent id in the load columns, empty
//! for the sink. `state` rows are written at every ministep boundary. `node` is the
//! injection node on `inject` rows and empty otherwise. `delivered` is
//! cumulative. Loads are one column per node id, sink included (always 0).
//! `check` rows carry checker notes and failures; their details never
//! contain commas.

use std::io::{self, Write};

use super::observe::CheckerEvent;
use crate::adversary::InjectionTrace;
use crate::error::{Error, Result};
use crate::topology::{NodeId, TreeNetwork};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub round: u64,
    pub phase: String,
    pub ministep: u64,
    pub node: Option<NodeId>,
    pub in_transit: usize,
    pub delivered: u64,
    pub loads: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Summary {
    pub rounds: u64,
    pub injected: u64,
    pub delivered: u64,
    pub peak_loads: Vec<usize>,
    pub global_peak: usize,
}

impl Summary {
    pub fn peak(&self, v: NodeId) -> usize {
        self.peak_loads[v.0]
    }

    pub fn write_text<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "rounds: {}", self.rounds)?;
        writeln!(out, "injected: {}", self.injected)?;
        writeln!(out, "delivered: {}", self.delivered)?;
        writeln!(out, "global_peak: {}", self.global_peak)?;
        let peaks = self
            .peak_loads
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "peak_loads: {peaks}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub nodes: usize,
    pub parents: Vec<Option<NodeId>>,
    pub records: Vec<TraceRecord>,
    pub events: Vec<CheckerEvent>,
    pub injections: InjectionTrace,
    pub summary: Summary,
}

pub const TRACE_HEADER_PREFIX: &str = "kind,round,phase,ministep,node,in_transit,delivered";

fn sanitize(details: &str) -> String {
    details
        .chars()
        .map(|ch| match ch {
            ',' => ';',
            '\n' | '\r' => ' ',
            ch => ch,
        })
        .collect()
}

impl ExecutionTrace {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write!(out, "{TRACE_HEADER_PREFIX}")?;
        for i in 0..self.nodes {
            write!(out, ",l{i}")?;
        }
        writeln!(out)?;
        write!(out, "parent,,,,,,")?;
        for p in &self.parents {
            match p {
                Some(p) => write!(out, ",{p}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
        let mut events = self.events.iter().peekable();
        for (i, rec) in self.records.iter().enumerate() {
            write!(out, "state,{},{},{},", rec.round, rec.phase, rec.ministep)?;
            if let Some(v) = rec.node {
                write!(out, "{v}")?;
            }
            write!(out, ",{},{}", rec.in_transit, rec.delivered)?;
            for l in &rec.loads {
                write!(out, ",{l}")?;
            }
            writeln!(out)?;
            // checker rows follow the state row of the boundary they refer to
            while let Some(ev) = events.next_if(|e| e.seq <= i as u64 + 1) {
                write_event(out, ev)?;
            }
        }
        for ev in events {
            write_event(out, ev)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace is ASCII")
    }
}

fn write_event<W: Write>(out: &mut W, ev: &CheckerEvent) -> io::Result<()> {
    writeln!(
        out,
        "check,{},{},{},{},{},{}",
        ev.round,
        ev.phase,
        ev.ministep,
        sanitize(&ev.checker),
        ev.kind,
        sanitize(&ev.details)
    )
}

/// Recovers the network and the injection trace from an execution trace
/// written by [`ExecutionTrace::write_csv`]. The horizon is the last
/// completed round; injections of an unfinished round are dropped. The
/// network gets capacity 1, which auditing ignores.
pub fn injections_from_csv(text: &str) -> Result<(TreeNetwork, InjectionTrace)> {
    let mut lines = text.lines();
    let columns = match lines.next() {
        Some(h) if h.starts_with(TRACE_HEADER_PREFIX) => h.split(',').count(),
        _ => return Err(Error::Parse("missing execution trace header".into())),
    };
    let mut parents = None;
    let mut trace = InjectionTrace::new();
    let mut horizon = 0u64;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", i + 2));
        if fields[0] == "parent" {
            if fields.len() != columns || parents.is_some() {
                return Err(bad("malformed parent row"));
            }
            let ids = fields[7..]
                .iter()
                .map(|f| match *f {
                    "" => Ok(None),
                    f => f.parse().map(|p| Some(NodeId(p))).map_err(|_| bad("bad parent id")),
                })
                .collect::<Result<Vec<_>>>()?;
            parents = Some(ids);
            continue;
        }
        if fields.len() < 4 {
            return Err(bad("too few fields"));
        }
        let round: u64 = fields[1].parse().map_err(|_| bad("bad round"))?;
        match (fields[0], fields[2]) {
            ("state", "inject") => {
                if fields.len() != columns || round == 0 {
                    return Err(bad("malformed inject row"));
                }
                let node: usize = fields[4].parse().map_err(|_| bad("bad node"))?;
                trace.record(round, NodeId(node));
            }
            ("state", "end") => horizon = horizon.max(round),
            ("state", _) | ("check", _) => {}
            _ => return Err(bad("unknown record kind")),
        }
    }
    let parents = parents.ok_or_else(|| Error::Parse("missing parent row".into()))?;
    let network = TreeNetwork::from_parents(parents, 1)?;
    trace.extend_to(horizon);
    Ok((network, trace.truncated(horizon)))
}
