//! Runtime invariant checkers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::engine::{Boundary, Checker, Event, Height, PacketId, Verdict};
use crate::error::{Error, Result};
use crate::policies::{activation_paths, PathKind, STANDARD_PRIORITY};
use crate::topology::NodeId;

use super::oracle::verify_activation_set;
use super::plateau::{exit_landing, find_plateaus, k_load, pre_image, total_two_load, Plateau};

/// Packets are neither created nor destroyed.
#[derive(Debug, Default)]
pub struct Conservation;

impl Checker for Conservation {
    fn name(&self) -> &str {
        "conservation"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        let expected = b.initial_packets + b.injected_total;
        let found = b.config.buffered_count()
            + b.config.in_transit().len() as u64
            + b.config.delivered_count();
        if expected == found {
            Verdict::Pass
        } else {
            Verdict::Fail(format!("expected {expected} packets, found {found}"))
        }
    }
}

/// No edge carries more than `c` packets in one round.
#[derive(Debug, Default)]
pub struct Capacity;

impl Checker for Capacity {
    fn name(&self) -> &str {
        "capacity"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        let c = b.network.capacity();
        match b
            .network
            .nodes()
            .find(|&v| b.config.forwarded_this_round(v) > c)
        {
            Some(v) => Verdict::Fail(format!(
                "edge {v} carried {} packets this round",
                b.config.forwarded_this_round(v)
            )),
            None => Verdict::Pass,
        }
    }
}

/// Every buffer stays at or below `limit`.
#[derive(Debug)]
pub struct MaxLoad {
    limit: usize,
}

impl MaxLoad {
    pub fn new(limit: usize) -> Self {
        Self { limit }
    }

    /// The FIE bound `σ + 2c`, with `σ` rounded down to a whole packet.
    pub fn for_fie(sigma_floor: u64, capacity: u32) -> Self {
        Self::new(sigma_floor as usize + 2 * capacity as usize)
    }

    pub fn limit(&self) -> usize {
        self.limit
    }
}

impl Checker for MaxLoad {
    fn name(&self) -> &str {
        "max-load"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        match b.loads.iter().enumerate().find(|(_, &l)| l > self.limit) {
            Some((v, l)) => Verdict::Fail(format!("node {v} holds {l} > {}", self.limit)),
            None => Verdict::Pass,
        }
    }
}

/// A packet never rises to a higher level while it stays in one buffer.
#[derive(Debug, Default)]
pub struct LevelMonotone {
    last: HashMap<PacketId, (NodeId, usize)>,
    scratch: HashMap<PacketId, (NodeId, usize)>,
}

impl Checker for LevelMonotone {
    fn name(&self) -> &str {
        "level-monotone"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        if matches!(b.event, Event::ForwardingStart) {
            return Verdict::Pass;
        }
        let c = b.network.capacity() as usize;
        let mut verdict = Verdict::Pass;
        self.scratch.clear();
        for v in b.network.nodes() {
            for (i, &p) in b.config.buffer(v).slots().iter().enumerate() {
                let level = i / c + 1;
                if let Some(&(prev_node, prev_level)) = self.last.get(&p) {
                    if prev_node == v && level > prev_level && verdict == Verdict::Pass {
                        verdict = Verdict::Fail(format!(
                            "packet {p} at node {v} rose from level {prev_level} to {level}"
                        ));
                    }
                }
                self.scratch.insert(p, (v, level));
            }
        }
        std::mem::swap(&mut self.last, &mut self.scratch);
        verdict
    }
}

/// Packets re-mapped at the end of a round land at level 1.
#[derive(Debug, Default)]
pub struct ArrivalsLevelOne;

impl Checker for ArrivalsLevelOne {
    fn name(&self) -> &str {
        "arrivals-level-one"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        let Event::RoundEnd(report) = b.event else {
            return Verdict::Pass;
        };
        for &(v, p) in &report.arrivals {
            match b.config.level(v, p) {
                Some(1) => {}
                Some(l) => return Verdict::Fail(format!("packet {p} arrived at node {v} at level {l}")),
                None => return Verdict::Fail(format!("packet {p} is not stored at node {v}")),
            }
        }
        Verdict::Pass
    }
}

/// Activation paths used by a forwarding ministep are well-formed. Paths
/// are checked for type, disjointness and priority order on every network;
/// exhaustive maximality runs only up to `exhaustive_limit` nodes.
#[derive(Debug)]
pub struct ActivationPaths {
    priority: [PathKind; 3],
    exhaustive_limit: usize,
    before: Vec<usize>,
}

impl Default for ActivationPaths {
    fn default() -> Self {
        Self::new(STANDARD_PRIORITY, 12)
    }
}

impl ActivationPaths {
    pub fn new(priority: [PathKind; 3], exhaustive_limit: usize) -> Self {
        Self {
            priority,
            exhaustive_limit,
            before: Vec::new(),
        }
    }
}

impl Checker for ActivationPaths {
    fn name(&self) -> &str {
        "activation-paths"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        let mut verdict = Verdict::Pass;
        if let Event::Forwarded {
            paths: Some(set),
            forwarders,
            ..
        } = b.event
        {
            let c = b.network.capacity();
            let mut heights: Vec<Height> = self.before.iter().map(|&l| Height::of_load(l, c)).collect();
            heights[b.network.sink().0] = Height::Sink;
            let mut activated: Vec<NodeId> = set
                .nodes(b.network)
                .into_iter()
                .filter(|v| self.before[v.0] > 0)
                .collect();
            activated.dedup();
            let mut fw = forwarders.to_vec();
            fw.sort();
            if fw != activated {
                verdict = Verdict::Fail(format!(
                    "forwarders {fw:?} differ from path members {activated:?}"
                ));
            } else if b.network.len() <= self.exhaustive_limit {
                if let Err(e) = verify_activation_set(b.network, &heights, set, &self.priority) {
                    verdict = Verdict::Fail(e);
                }
            } else if self.priority == STANDARD_PRIORITY && activation_paths(b.network, &heights) != *set {
                verdict = Verdict::Fail("paths differ from a recomputation".into());
            }
        }
        self.before.clear();
        self.before.extend_from_slice(b.loads);
        verdict
    }
}

/// A plateau, its 2-load and whether its exit node was activated.
type Watched = (Plateau, u64, bool);

/// Every activated exit of a 2-plateau lowers its 2-load by at least one
/// within the ministep. The last ministep of a round is judged after the
/// end-of-round re-mapping.
#[derive(Debug, Default)]
pub struct ExitForwards {
    before: Vec<usize>,
    pending: Option<(u32, Vec<Watched>)>,
}

impl ExitForwards {
    fn snapshot(b: &Boundary<'_>, before: &[usize], forwarders: &[NodeId]) -> Result<Vec<(Plateau, u64, bool)>> {
        let c = b.network.capacity();
        find_plateaus(b.network, before, 2)?
            .into_iter()
            .map(|p| {
                let (exit, _) = exit_landing(&p, b.network, before)?;
                let load = k_load(before, &p.nodes, 2, c);
                Ok((p, load, forwarders.contains(&exit)))
            })
            .collect()
    }

    fn judge(b: &Boundary<'_>, step: u32, plateaus: &[(Plateau, u64, bool)]) -> Verdict {
        let c = b.network.capacity();
        for (p, before, activated) in plateaus {
            let after = k_load(b.loads, &p.nodes, 2, c);
            if after + u64::from(*activated) > *before {
                return Verdict::Fail(format!(
                    "ministep {step}: 2-load of {:?} went from {before} to {after} (exit activated: {activated})",
                    p.nodes
                ));
            }
        }
        Verdict::Pass
    }
}

impl Checker for ExitForwards {
    fn name(&self) -> &str {
        "exit-forwards"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        let mut verdict = Verdict::Pass;
        match b.event {
            Event::Forwarded { step, forwarders, .. } => {
                match Self::snapshot(b, &self.before, forwarders) {
                    Err(e) => verdict = Verdict::Fail(e.to_string()),
                    Ok(plateaus) if step == b.network.capacity() => {
                        self.pending = Some((step, plateaus));
                    }
                    Ok(plateaus) => verdict = Self::judge(b, step, &plateaus),
                }
            }
            Event::RoundEnd(_) => {
                if let Some((step, plateaus)) = self.pending.take() {
                    verdict = Self::judge(b, step, &plateaus);
                }
            }
            _ => {}
        }
        self.before.clear();
        self.before.extend_from_slice(b.loads);
        verdict
    }
}

/// Invariant I: the total 2-load never exceeds the injections since the
/// last flat configuration minus `c` per round since then.
#[derive(Debug, Default)]
pub struct InvariantI {
    flat_round: u64,
    since_flat: u64,
    started: bool,
}

impl InvariantI {
    /// `(lhs, rhs)` for the state just observed.
    fn sides(&self, b: &Boundary<'_>) -> (i128, i128) {
        let c = b.network.capacity();
        let lhs = total_two_load(b.loads, c) as i128;
        let rounds = b.round.saturating_sub(self.flat_round) as i128;
        (lhs, self.since_flat as i128 - i128::from(c) * rounds)
    }
}

impl Checker for InvariantI {
    fn name(&self) -> &str {
        "invariant-i"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        let c = b.network.capacity() as usize;
        if !self.started {
            self.started = true;
            self.flat_round = b.round;
            self.since_flat = total_two_load(b.loads, b.network.capacity());
        }
        match b.event {
            Event::Injected { .. } => self.since_flat += 1,
            Event::ForwardingStart => return Verdict::Pass,
            _ => {}
        }
        let flat = b
            .network
            .nodes()
            .all(|v| b.network.is_sink(v) || b.loads[v.0] <= c);
        if flat {
            self.flat_round = b.round;
            self.since_flat = 0;
            return Verdict::Pass;
        }
        let (lhs, rhs) = self.sides(b);
        if lhs > rhs {
            Verdict::Fail(format!(
                "total 2-load {lhs} exceeds {rhs} ({} injections since the flat state of round {})",
                self.since_flat, self.flat_round
            ))
        } else {
            Verdict::Pass
        }
    }
}

/// Over one round every 2-plateau loses at least `c` from the 2-load of its
/// pre-image. The start snapshot is taken after the round's injections.
#[derive(Debug, Default)]
pub struct ForwardLose {
    start: Option<(Vec<usize>, Vec<Plateau>)>,
}

impl Checker for ForwardLose {
    fn name(&self) -> &str {
        "forward-lose"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        match b.event {
            Event::ForwardingStart => match find_plateaus(b.network, b.loads, 2) {
                Ok(plateaus) => {
                    self.start = Some((b.loads.to_vec(), plateaus));
                    Verdict::Pass
                }
                Err(e) => Verdict::Fail(e.to_string()),
            },
            Event::RoundEnd(report) => {
                let Some((before, start)) = self.start.take() else {
                    return Verdict::Pass;
                };
                let c = b.network.capacity();
                let end = match find_plateaus(b.network, b.loads, 2) {
                    Ok(p) => p,
                    Err(e) => return Verdict::Fail(e.to_string()),
                };
                let mut notes = Vec::new();
                for q in &end {
                    let pre = pre_image(q, &start);
                    if pre.is_empty() {
                        notes.push(format!("2-plateau {:?} has an empty pre-image", q.nodes));
                        continue;
                    }
                    let union: Vec<NodeId> = pre.iter().flat_map(|p| p.nodes.iter().copied()).collect();
                    let was = k_load(&before, &union, 2, c);
                    let now = k_load(b.loads, &q.nodes, 2, c);
                    if now + u64::from(c) > was {
                        return Verdict::Fail(format!(
                            "round {}: 2-load of {:?} is {now}, pre-image had {was}",
                            report.round, q.nodes
                        ));
                    }
                }
                if notes.is_empty() {
                    Verdict::Pass
                } else {
                    Verdict::Note(notes.join("; "))
                }
            }
            _ => Verdict::Pass,
        }
    }
}

/// Against the adaptive max-load adversary the maximum load at the start of
/// round `i` is at least `⌈c(1 - 2^-(i-1))⌉` until it reaches `c`.
#[derive(Debug, Default)]
pub struct MaxLoadGrowth {
    reached: bool,
}

/// `⌈c(1 - 2^-(i-1))⌉` for `i >= 1`.
pub fn growth_lower_bound(capacity: u32, round: u64) -> u64 {
    let c = u64::from(capacity);
    let halvings = round.saturating_sub(1);
    if halvings >= 64 {
        c
    } else {
        c - (c >> halvings)
    }
}

impl Checker for MaxLoadGrowth {
    fn name(&self) -> &str {
        "max-load-growth"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        if self.reached || !matches!(b.event, Event::Start | Event::RoundEnd(_)) {
            return Verdict::Pass;
        }
        let c = b.network.capacity();
        let max = b.loads.iter().copied().max().unwrap_or(0) as u64;
        if max >= u64::from(c) {
            self.reached = true;
            return Verdict::Pass;
        }
        let bound = growth_lower_bound(c, b.round);
        if max < bound {
            Verdict::Fail(format!("max load {max} at the start of round {} is below {bound}", b.round))
        } else {
            Verdict::Pass
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckerKind {
    Conservation,
    Capacity,
    MaxLoad,
    LevelMonotone,
    ArrivalsLevelOne,
    ActivationPaths,
    ExitForwards,
    InvariantI,
    ForwardLose,
    MaxLoadGrowth,
}

impl CheckerKind {
    pub const ALL: [CheckerKind; 10] = [
        CheckerKind::Conservation,
        CheckerKind::Capacity,
        CheckerKind::MaxLoad,
        CheckerKind::LevelMonotone,
        CheckerKind::ArrivalsLevelOne,
        CheckerKind::ActivationPaths,
        CheckerKind::ExitForwards,
        CheckerKind::InvariantI,
        CheckerKind::ForwardLose,
        CheckerKind::MaxLoadGrowth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckerKind::Conservation => "conservation",
            CheckerKind::Capacity => "capacity",
            CheckerKind::MaxLoad => "max-load",
            CheckerKind::LevelMonotone => "level-monotone",
            CheckerKind::ArrivalsLevelOne => "arrivals-level-one",
            CheckerKind::ActivationPaths => "activation-paths",
            CheckerKind::ExitForwards => "exit-forwards",
            CheckerKind::InvariantI => "invariant-i",
            CheckerKind::ForwardLose => "forward-lose",
            CheckerKind::MaxLoadGrowth => "max-load-growth",
        }
    }

    /// FIE-specific checkers assume the execution runs FIE.
    pub fn fie_only(self) -> bool {
        matches!(
            self,
            CheckerKind::MaxLoad
                | CheckerKind::ArrivalsLevelOne
                | CheckerKind::ActivationPaths
                | CheckerKind::ExitForwards
                | CheckerKind::InvariantI
                | CheckerKind::ForwardLose
        )
    }

    /// `sigma_floor` is only needed by `max-load`.
    pub fn build(self, capacity: u32, sigma_floor: Option<u64>) -> Result<Box<dyn Checker>> {
        Ok(match self {
            CheckerKind::Conservation => Box::new(Conservation),
            CheckerKind::Capacity => Box::new(Capacity),
            CheckerKind::MaxLoad => {
                let sigma = sigma_floor.ok_or_else(|| {
                    Error::InvalidArgument("the max-load checker needs a sigma".into())
                })?;
                Box::new(MaxLoad::for_fie(sigma, capacity))
            }
            CheckerKind::LevelMonotone => Box::<LevelMonotone>::default(),
            CheckerKind::ArrivalsLevelOne => Box::new(ArrivalsLevelOne),
            CheckerKind::ActivationPaths => Box::<ActivationPaths>::default(),
            CheckerKind::ExitForwards => Box::<ExitForwards>::default(),
            CheckerKind::InvariantI => Box::<InvariantI>::default(),
            CheckerKind::ForwardLose => Box::<ForwardLose>::default(),
            CheckerKind::MaxLoadGrowth => Box::<MaxLoadGrowth>::default(),
        })
    }
}

impl fmt::Display for CheckerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        CheckerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown checker `{s}`")))
    }
}

/// Parses a comma-separated checker list; `all` selects every checker.
pub fn parse_checker_list(s: &str) -> Result<Vec<CheckerKind>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.eq_ignore_ascii_case("all") {
            return Ok(CheckerKind::ALL.to_vec());
        }
        let k: CheckerKind = part.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{constant_at_node, Silent};
    use crate::engine::{Configuration, Execution};
    use crate::policies::{Fie, Greedy};
    use crate::topology::TreeNetwork;

    #[test]
    fn growth_bound_values() {
        assert_eq!(growth_lower_bound(4, 1), 0);
        assert_eq!(growth_lower_bound(4, 2), 2);
        assert_eq!(growth_lower_bound(4, 3), 3);
        assert_eq!(growth_lower_bound(4, 4), 4);
        assert_eq!(growth_lower_bound(5, 2), 3);
    }

    #[test]
    fn parses_checker_names() {
        assert_eq!("invariant_i".parse::<CheckerKind>().unwrap(), CheckerKind::InvariantI);
        assert!("nonsense".parse::<CheckerKind>().is_err());
        assert_eq!(parse_checker_list("all").unwrap().len(), CheckerKind::ALL.len());
        assert_eq!(
            parse_checker_list("capacity, conservation,capacity").unwrap(),
            vec![CheckerKind::Capacity, CheckerKind::Conservation]
        );
    }

    fn fie_run(n: usize, c: u32, loads: &[usize], rounds: u64) -> Result<()> {
        let net = TreeNetwork::line(n, c)?;
        let cfg = Configuration::from_loads(&net, loads)?;
        let mut ex = Execution::from_configuration(net, Box::new(Silent), Box::new(Fie::new()), cfg);
        for k in CheckerKind::ALL {
            if k != CheckerKind::MaxLoadGrowth {
                ex.attach(k.build(c, Some(10))?);
            }
        }
        ex.run(rounds).map(|_| ())
    }

    #[test]
    fn fie_passes_from_a_hilly_start() {
        fie_run(6, 1, &[3, 1, 1, 0, 2, 0], 10).unwrap();
        fie_run(7, 2, &[0, 5, 2, 0, 6, 1, 0], 10).unwrap();
    }

    #[test]
    fn greedy_conserves_packets() {
        let net = TreeNetwork::line(4, 1).unwrap();
        let mut ex = Execution::new(net, Box::new(constant_at_node(NodeId(0), 1).unwrap()), Box::new(Greedy))
            .with_checker(Box::new(Conservation))
            .with_checker(Box::new(Capacity));
        ex.run(20).unwrap();
    }
}
