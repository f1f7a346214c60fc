//! Observers invoked synchronously at every ministep boundary.

use std::fmt;

use super::config::{Configuration, PacketId};
use crate::policies::ActivationPathSet;
use crate::topology::{NodeId, TreeNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Injection,
    /// Forwarding ministep `k` of the round, `1..=c`, has not run yet.
    Forwarding(u32),
    /// All `c` forwarding ministeps are done; packets are still in transit.
    EndOfRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clock {
    pub round: u64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundReport {
    pub round: u64,
    pub loads: Vec<usize>,
    pub injected: u64,
    pub delivered: u64,
    pub delivered_total: u64,
    /// Packets re-mapped into non-sink buffers at the end of the round, in
    /// the order they were stored.
    pub arrivals: Vec<(NodeId, PacketId)>,
}

#[derive(Debug, Clone, Copy)]
pub enum Event<'a> {
    Start,
    Injected {
        node: NodeId,
        packet: PacketId,
    },
    /// All injections of the round are done; the first forwarding ministep
    /// has not run. The configuration equals the previous boundary's.
    ForwardingStart,
    Forwarded {
        step: u32,
        forwarders: &'a [NodeId],
        paths: Option<&'a ActivationPathSet>,
    },
    RoundEnd(&'a RoundReport),
    /// Explicit evaluation outside the ministep loop.
    Probe,
}

impl Event<'_> {
    pub fn label(&self) -> String {
        match self {
            Event::Start => "start".into(),
            Event::Injected { .. } => "inject".into(),
            Event::ForwardingStart => "forwarding".into(),
            Event::Forwarded { step, .. } => format!("forward{step}"),
            Event::RoundEnd(_) => "end".into(),
            Event::Probe => "probe".into(),
        }
    }
}

/// State handed to every checker.
pub struct Boundary<'a> {
    pub network: &'a TreeNetwork,
    pub config: &'a Configuration,
    pub loads: &'a [usize],
    /// Round containing the next ministep. After a `RoundEnd` this is
    /// already the following round.
    pub round: u64,
    /// Ministeps completed so far.
    pub ministep: u64,
    pub event: Event<'a>,
    /// Packets injected by injection ministeps so far.
    pub injected_total: u64,
    /// Packets present in the configuration the execution started from.
    pub initial_packets: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// Recorded in the trace without stopping the run.
    Note(String),
    Fail(String),
}

pub trait Checker: Send {
    fn name(&self) -> &str;
    fn observe(&mut self, boundary: &Boundary<'_>) -> Verdict;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Note,
    Fail,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Note => "note",
            EventKind::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckerEvent {
    pub checker: String,
    pub round: u64,
    pub ministep: u64,
    pub phase: String,
    pub kind: EventKind,
    pub details: String,
    /// Number of state records emitted before this event.
    pub seq: u64,
}
