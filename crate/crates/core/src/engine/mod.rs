//! Round and ministep execution.
//!
//! A round is zero or more injection ministeps followed by exactly `c`
//! forwarding ministeps. Forwarded packets stay in transit until the end of
//! the round, when they are appended to their parent's buffer (or delivered
//! when the parent is the sink). Arrivals are stored in ascending sender id,
//! then ministep order.

mod config;
mod observe;
mod trace;

pub use config::{level_of_position, Buffer, Configuration, Height, Packet, PacketId, Transit};
pub use observe::{
    Boundary, Checker, CheckerEvent, Clock, Event, EventKind, Phase, RoundReport, Verdict,
};
pub use trace::{injections_from_csv, ExecutionTrace, Summary, TraceRecord, TRACE_HEADER_PREFIX};

use crate::adversary::{InjectionPattern, InjectionTrace};
use crate::error::{Error, Result};
use crate::policies::{ActivationPathSet, Decision, Policy};
use crate::topology::{NodeId, TreeNetwork};

pub struct Execution {
    network: TreeNetwork,
    pattern: Box<dyn InjectionPattern>,
    policy: Box<dyn Policy>,
    config: Configuration,
    clock: Clock,
    ministeps: u64,
    packets: Vec<Packet>,
    next_packet: u64,
    initial_packets: u64,
    injected_total: u64,
    injected_this_round: u64,
    delivered_at_round_start: u64,
    injections: InjectionTrace,
    checkers: Vec<Box<dyn Checker>>,
    events: Vec<CheckerEvent>,
    records: Vec<TraceRecord>,
    record: bool,
    seq: u64,
    peaks: Vec<usize>,
    started: bool,
    loads_scratch: Vec<usize>,
}

impl Execution {
    pub fn new(
        network: TreeNetwork,
        pattern: Box<dyn InjectionPattern>,
        policy: Box<dyn Policy>,
    ) -> Self {
        let config = Configuration::new(&network);
        Self::from_configuration(network, pattern, policy, config)
    }

    /// Starts from an arbitrary configuration. Packets already buffered count
    /// as initial packets, not injections.
    pub fn from_configuration(
        network: TreeNetwork,
        pattern: Box<dyn InjectionPattern>,
        policy: Box<dyn Policy>,
        config: Configuration,
    ) -> Self {
        let initial_packets = config.buffered_count();
        let next_packet = config
            .live_packets()
            .map(|p| p.0 + 1)
            .max()
            .unwrap_or(0);
        let peaks = config.loads();
        Self {
            network,
            pattern,
            policy,
            config,
            clock: Clock {
                round: 1,
                phase: Phase::Injection,
            },
            ministeps: 0,
            packets: Vec::new(),
            next_packet,
            initial_packets,
            injected_total: 0,
            injected_this_round: 0,
            delivered_at_round_start: 0,
            injections: InjectionTrace::new(),
            checkers: Vec::new(),
            events: Vec::new(),
            records: Vec::new(),
            record: false,
            seq: 0,
            peaks,
            started: false,
            loads_scratch: Vec::new(),
        }
    }

    /// Keep a [`TraceRecord`] for every ministep boundary.
    pub fn with_recording(mut self, on: bool) -> Self {
        self.record = on;
        self
    }

    pub fn attach(&mut self, checker: Box<dyn Checker>) {
        self.checkers.push(checker);
    }

    pub fn with_checker(mut self, checker: Box<dyn Checker>) -> Self {
        self.attach(checker);
        self
    }

    pub fn network(&self) -> &TreeNetwork {
        &self.network
    }

    pub fn configuration(&self) -> &Configuration {
        &self.config
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn ministeps(&self) -> u64 {
        self.ministeps
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn injections(&self) -> &InjectionTrace {
        &self.injections
    }

    pub fn events(&self) -> &[CheckerEvent] {
        &self.events
    }

    pub fn policy_name(&self) -> &'static str {
        self.policy.name()
    }

    pub fn pattern_name(&self) -> &'static str {
        self.pattern.name()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            rounds: self.clock.round - 1,
            injected: self.injected_total,
            delivered: self.config.delivered_count(),
            peak_loads: self.peaks.clone(),
            global_peak: self.peaks.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn trace(&self) -> ExecutionTrace {
        ExecutionTrace {
            nodes: self.network.len(),
            parents: self.network.parents().to_vec(),
            records: self.records.clone(),
            events: self.events.clone(),
            injections: self.injections.clone(),
            summary: self.summary(),
        }
    }

    /// Places `count` packets on top of `node` without an injection
    /// ministep, bypassing all accounting. Meant for building corrupted
    /// states in checker tests; follow with [`Execution::probe`].
    pub fn insert_untracked(&mut self, node: NodeId, count: usize) -> Result<()> {
        self.network.check_node(node)?;
        if self.network.is_sink(node) {
            return Err(Error::InvalidArgument("the sink has no buffer".into()));
        }
        for _ in 0..count {
            let id = PacketId(self.next_packet);
            self.next_packet += 1;
            self.config.buffer_mut(node).push(id);
        }
        Ok(())
    }

    /// Evaluates every checker on the current state.
    pub fn probe(&mut self) -> Result<()> {
        self.ensure_started()?;
        self.observe(Event::Probe)
    }

    fn ensure_started(&mut self) -> Result<()> {
        if !self.started {
            self.started = true;
            self.observe(Event::Start)?;
        }
        Ok(())
    }

    fn observe(&mut self, event: Event<'_>) -> Result<()> {
        let mut loads = std::mem::take(&mut self.loads_scratch);
        loads.clear();
        loads.extend((0..self.network.len()).map(|i| self.config.load(NodeId(i))));
        for (peak, &l) in self.peaks.iter_mut().zip(&loads) {
            *peak = (*peak).max(l);
        }

        let recorded = !matches!(event, Event::ForwardingStart | Event::Probe);
        if recorded {
            self.seq += 1;
            if self.record {
                let (round, node) = match event {
                    Event::RoundEnd(report) => (report.round, None),
                    Event::Start => (0, None),
                    Event::Injected { node, .. } => (self.clock.round, Some(node)),
                    _ => (self.clock.round, None),
                };
                self.records.push(TraceRecord {
                    round,
                    phase: event.label(),
                    ministep: self.ministeps,
                    node,
                    in_transit: self.config.in_transit().len(),
                    delivered: self.config.delivered_count(),
                    loads: loads.clone(),
                });
            }
        }

        let mut failure = None;
        if !self.checkers.is_empty() {
            let boundary = Boundary {
                network: &self.network,
                config: &self.config,
                loads: &loads,
                round: self.clock.round,
                ministep: self.ministeps,
                event,
                injected_total: self.injected_total,
                initial_packets: self.initial_packets,
            };
            for checker in &mut self.checkers {
                let (kind, details) = match checker.observe(&boundary) {
                    Verdict::Pass => continue,
                    Verdict::Note(d) => (EventKind::Note, d),
                    Verdict::Fail(d) => (EventKind::Fail, d),
                };
                let ev = CheckerEvent {
                    checker: checker.name().to_string(),
                    round: self.clock.round,
                    ministep: self.ministeps,
                    phase: event.label(),
                    kind,
                    details,
                    seq: self.seq,
                };
                if kind == EventKind::Fail && failure.is_none() {
                    failure = Some(Error::CheckerViolation {
                        checker: ev.checker.clone(),
                        round: ev.round,
                        ministep: ev.ministep,
                        details: ev.details.clone(),
                    });
                }
                self.events.push(ev);
            }
        }
        self.loads_scratch = loads;
        failure.map_or(Ok(()), Err)
    }

    /// One injection ministep: a fresh packet on top of `node`'s buffer, or
    /// straight to delivery when `node` is the sink.
    pub fn inject(&mut self, node: NodeId) -> Result<PacketId> {
        self.network.check_node(node)?;
        if self.clock.phase != Phase::Injection {
            return Err(Error::Phase(format!(
                "injection requested during {:?} of round {}",
                self.clock.phase, self.clock.round
            )));
        }
        self.ensure_started()?;
        let id = PacketId(self.next_packet);
        self.next_packet += 1;
        self.packets.push(Packet {
            id,
            source: node,
            injected_round: self.clock.round,
        });
        if self.network.is_sink(node) {
            self.config.deliver(id);
        } else {
            self.config.buffer_mut(node).push(id);
        }
        self.injections.record(self.clock.round, node);
        self.injected_total += 1;
        self.injected_this_round += 1;
        self.ministeps += 1;
        self.observe(Event::Injected { node, packet: id })?;
        Ok(id)
    }

    fn current_step(&mut self) -> Result<Option<u32>> {
        match self.clock.phase {
            Phase::Injection => {
                self.ensure_started()?;
                self.clock.phase = Phase::Forwarding(1);
                self.observe(Event::ForwardingStart)?;
                Ok(Some(1))
            }
            Phase::Forwarding(k) => Ok(Some(k)),
            Phase::EndOfRound => Ok(None),
        }
    }

    /// One forwarding ministep: every forwarder sends its top packet toward
    /// its parent.
    pub fn forward_ministep(&mut self, forwarders: &[NodeId]) -> Result<()> {
        self.forward_inner(forwarders, None)
    }

    fn forward_inner(&mut self, forwarders: &[NodeId], paths: Option<&ActivationPathSet>) -> Result<()> {
        let capacity = self.network.capacity();
        let mut sorted = forwarders.to_vec();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Policy("a node appears twice among the forwarders".into()));
        }
        for &v in &sorted {
            self.network.check_node(v)?;
            if self.network.is_sink(v) {
                return Err(Error::Policy("the sink cannot forward".into()));
            }
            let forwarded = self.config.forwarded_this_round(v) + 1;
            if forwarded > capacity {
                return Err(Error::Capacity {
                    edge: v,
                    round: self.clock.round,
                    forwarded,
                    capacity,
                });
            }
            if self.config.load(v) == 0 {
                return Err(Error::Policy(format!("node {v} forwards from an empty buffer")));
            }
        }
        let step = self.current_step()?.ok_or_else(|| {
            Error::Phase(format!(
                "all {capacity} forwarding ministeps of round {} are done",
                self.clock.round
            ))
        })?;

        for &v in &sorted {
            let packet = self.config.buffer_mut(v).pop().expect("checked non-empty");
            let to = self.network.parent(v).expect("non-sink has a parent");
            self.config.forwarded_mut()[v.0] += 1;
            self.config.in_transit_mut().push(Transit {
                packet,
                from: v,
                to,
                step,
            });
        }
        self.ministeps += 1;
        self.clock.phase = if step >= capacity {
            Phase::EndOfRound
        } else {
            Phase::Forwarding(step + 1)
        };
        self.observe(Event::Forwarded {
            step,
            forwarders: &sorted,
            paths,
        })
    }

    /// Re-maps in-transit packets, resets edge counters and advances the
    /// round.
    pub fn end_of_round(&mut self) -> Result<RoundReport> {
        if self.clock.phase != Phase::EndOfRound {
            return Err(Error::Phase(format!(
                "round {} ended during {:?}",
                self.clock.round, self.clock.phase
            )));
        }
        let mut transit = std::mem::take(self.config.in_transit_mut());
        transit.sort_unstable_by_key(|t| (t.from, t.step));
        let mut arrivals = Vec::with_capacity(transit.len());
        for t in transit.drain(..) {
            if self.network.is_sink(t.to) {
                self.config.deliver(t.packet);
            } else {
                self.config.buffer_mut(t.to).push(t.packet);
                arrivals.push((t.to, t.packet));
            }
        }
        // keep the allocation for the next round
        *self.config.in_transit_mut() = transit;
        for f in self.config.forwarded_mut().iter_mut() {
            *f = 0;
        }
        let delivered_total = self.config.delivered_count();
        let report = RoundReport {
            round: self.clock.round,
            loads: self.config.loads(),
            injected: self.injected_this_round,
            delivered: delivered_total - self.delivered_at_round_start,
            delivered_total,
            arrivals,
        };
        self.clock = Clock {
            round: self.clock.round + 1,
            phase: Phase::Injection,
        };
        self.injected_this_round = 0;
        self.delivered_at_round_start = delivered_total;
        self.observe(Event::RoundEnd(&report))?;
        Ok(report)
    }

    /// One full round driven by the pattern and the policy.
    pub fn step_round(&mut self) -> Result<RoundReport> {
        self.ensure_started()?;
        if self.clock.phase != Phase::Injection {
            return Err(Error::Phase("step_round called mid-round".into()));
        }
        let sources = self
            .pattern
            .next_round(&self.network, self.clock.round, Some(&self.config))?;
        for v in sources {
            self.inject(v)?;
        }
        self.injections.extend_to(self.clock.round);
        for k in 1..=self.network.capacity() {
            let Decision { forwarders, paths } = self.policy.decide(&self.network, &self.config, k)?;
            self.forward_inner(&forwarders, paths.as_ref())?;
        }
        self.end_of_round()
    }

    /// Runs `rounds` full rounds, evaluating every attached checker at each
    /// ministep boundary. Stops at the first checker failure.
    pub fn run(&mut self, rounds: u64) -> Result<ExecutionTrace> {
        self.ensure_started()?;
        for _ in 0..rounds {
            self.step_round()?;
        }
        Ok(self.trace())
    }
}
