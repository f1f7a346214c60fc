//! Injection patterns and their `(rho, sigma)` audit.

mod audit;

pub use audit::{audit, audit_exhaustive, AuditVerdict, BurstinessBound, InjectionTrace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Configuration;
use crate::error::{Error, Result};
use crate::topology::{NodeId, TreeNetwork};
use crate::Rational;

/// Per-round generator of injection sources, one entry per packet.
pub trait InjectionPattern: Send {
    fn name(&self) -> &'static str;

    /// Adaptive patterns need the configuration at the start of the round.
    fn is_adaptive(&self) -> bool {
        false
    }

    fn next_round(
        &mut self,
        network: &TreeNetwork,
        round: u64,
        config: Option<&Configuration>,
    ) -> Result<Vec<NodeId>>;
}

/// Never injects.
#[derive(Debug, Clone, Default)]
pub struct Silent;

impl InjectionPattern for Silent {
    fn name(&self) -> &'static str {
        "none"
    }

    fn next_round(&mut self, _: &TreeNetwork, _: u64, _: Option<&Configuration>) -> Result<Vec<NodeId>> {
        Ok(Vec::new())
    }
}

/// `per_round` packets at `node` in every round.
#[derive(Debug, Clone)]
pub struct ConstantAtNode {
    node: NodeId,
    per_round: usize,
}

impl ConstantAtNode {
    pub fn new(node: NodeId, per_round: usize) -> Result<Self> {
        if per_round == 0 {
            return Err(Error::InvalidArgument("per_round must be positive".into()));
        }
        Ok(Self { node, per_round })
    }
}

pub fn constant_at_node(node: NodeId, per_round: usize) -> Result<ConstantAtNode> {
    ConstantAtNode::new(node, per_round)
}

impl InjectionPattern for ConstantAtNode {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn next_round(&mut self, network: &TreeNetwork, _: u64, _: Option<&Configuration>) -> Result<Vec<NodeId>> {
        network.check_node(self.node)?;
        Ok(vec![self.node; self.per_round])
    }
}

/// On the `n`-node line: one packet at `v_{2i-1}` in rounds `i = 1..=n/2`,
/// then one packet at `v_{n-1}` in rounds `n/2 + 1..=n`, then nothing.
#[derive(Debug, Clone)]
pub struct TwoPhase {
    n: usize,
}

impl TwoPhase {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "two-phase pattern needs an even n >= 4, got {n}"
            )));
        }
        Ok(Self { n })
    }
}

pub fn two_phase(n: usize) -> Result<TwoPhase> {
    TwoPhase::new(n)
}

impl InjectionPattern for TwoPhase {
    fn name(&self) -> &'static str {
        "two-phase"
    }

    fn next_round(&mut self, network: &TreeNetwork, round: u64, _: Option<&Configuration>) -> Result<Vec<NodeId>> {
        if network.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "two-phase pattern built for n={} run on {} nodes",
                self.n,
                network.len()
            )));
        }
        let half = (self.n / 2) as u64;
        let r = round;
        Ok(if (1..=half).contains(&r) {
            vec![NodeId(2 * r as usize - 2)]
        } else if r > half && r <= self.n as u64 {
            vec![NodeId(self.n - 2)]
        } else {
            Vec::new()
        })
    }
}

/// Adaptive adversary forcing some buffer to `sigma + 2c`.
///
/// Each round it injects `c` packets into the lowest-id non-sink node of
/// maximum load at the start of the round. As soon as that maximum is at
/// least `c` it injects `c + sigma` there instead and stops for good.
#[derive(Debug, Clone)]
pub struct AdaptiveMaxLoad {
    capacity: usize,
    sigma: usize,
    halted: bool,
    burst_round: Option<u64>,
}

impl AdaptiveMaxLoad {
    pub fn new(capacity: u32, sigma: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("capacity must be positive".into()));
        }
        Ok(Self {
            capacity: capacity as usize,
            sigma: sigma as usize,
            halted: false,
            burst_round: None,
        })
    }

    pub fn burst_round(&self) -> Option<u64> {
        self.burst_round
    }
}

pub fn adaptive_max_load(capacity: u32, sigma: u32) -> Result<AdaptiveMaxLoad> {
    AdaptiveMaxLoad::new(capacity, sigma)
}

impl InjectionPattern for AdaptiveMaxLoad {
    fn name(&self) -> &'static str {
        "adaptive-max-load"
    }

    fn is_adaptive(&self) -> bool {
        true
    }

    fn next_round(&mut self, network: &TreeNetwork, round: u64, config: Option<&Configuration>) -> Result<Vec<NodeId>> {
        let config = config.ok_or(Error::Adaptivity("adaptive-max-load"))?;
        if self.halted {
            return Ok(Vec::new());
        }
        let target = network
            .nodes()
            .filter(|&v| !network.is_sink(v))
            .fold(None::<(NodeId, usize)>, |best, v| {
                let load = config.load(v);
                match best {
                    Some((_, b)) if b >= load => best,
                    _ => Some((v, load)),
                }
            });
        let Some((node, load)) = target else {
            return Ok(vec![network.sink(); self.capacity]);
        };
        if load >= self.capacity {
            self.halted = true;
            self.burst_round = Some(round);
            Ok(vec![node; self.capacity + self.sigma])
        } else {
            Ok(vec![node; self.capacity])
        }
    }
}

/// How [`RandomCompliant`] picks its injection attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomStyle {
    /// Sources uniform over all nodes.
    Uniform,
    /// Most attempts target a few fixed nodes.
    Hotspot,
    /// Quiet stretches followed by dense bursts.
    Bursty,
}

/// Seeded random injections filtered through a per-edge token bucket so the
/// emitted trace always complies with the given bound.
///
/// Each edge holds `sigma` tokens initially, gains `rho` at the start of
/// every round and is capped at `sigma + rho`. A packet is admitted only if
/// every edge on its route has a full token, which it then consumes. These
/// buckets track the tightest window ending at the current round exactly,
/// so admission is equivalent to staying within the bound. Tokens are kept
/// as integers scaled by the common denominator of `rho` and `sigma`.
#[derive(Debug, Clone)]
pub struct RandomCompliant {
    bound: BurstinessBound<Rational>,
    style: RandomStyle,
    rng: ChaCha8Rng,
    scale: i64,
    tokens: Vec<i64>,
    hotspots: Vec<NodeId>,
    quiet_left: u32,
}

impl RandomCompliant {
    pub fn new(bound: BurstinessBound<Rational>, seed: u64) -> Self {
        let style = match seed % 3 {
            0 => RandomStyle::Uniform,
            1 => RandomStyle::Hotspot,
            _ => RandomStyle::Bursty,
        };
        Self::with_style(bound, style, seed)
    }

    pub fn with_style(bound: BurstinessBound<Rational>, style: RandomStyle, seed: u64) -> Self {
        Self {
            bound,
            style,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scale: num_integer::Integer::lcm(bound.rho.denom(), bound.sigma.denom()),
            tokens: Vec::new(),
            hotspots: Vec::new(),
            quiet_left: 0,
        }
    }

    pub fn style(&self) -> RandomStyle {
        self.style
    }

    fn scaled(&self, x: Rational) -> i64 {
        x.numer() * (self.scale / x.denom())
    }

    fn init(&mut self, network: &TreeNetwork) {
        let sigma = self.scaled(self.bound.sigma);
        self.tokens = vec![sigma; network.len()];
        let k = self.rng.gen_range(1..=3.min(network.len()));
        self.hotspots = (0..k)
            .map(|_| NodeId(self.rng.gen_range(0..network.len())))
            .collect();
    }

    fn pick(&mut self, network: &TreeNetwork) -> NodeId {
        match self.style {
            RandomStyle::Hotspot if self.rng.gen_bool(0.8) => {
                self.hotspots[self.rng.gen_range(0..self.hotspots.len())]
            }
            _ => NodeId(self.rng.gen_range(0..network.len())),
        }
    }
}

impl InjectionPattern for RandomCompliant {
    fn name(&self) -> &'static str {
        "random"
    }

    fn next_round(&mut self, network: &TreeNetwork, _: u64, _: Option<&Configuration>) -> Result<Vec<NodeId>> {
        if self.tokens.len() != network.len() {
            self.init(network);
        }
        let cap = self.bound.sigma + self.bound.rho;
        let (rho, cap_scaled, one) = (self.scaled(self.bound.rho), self.scaled(cap), self.scale);
        for t in &mut self.tokens {
            *t = (*t + rho).min(cap_scaled);
        }
        let scale = (cap.ceil().to_integer().max(1) as u32) + 1;
        let attempts = match self.style {
            RandomStyle::Uniform | RandomStyle::Hotspot => self.rng.gen_range(0..=2 * scale),
            RandomStyle::Bursty => {
                if self.quiet_left > 0 {
                    self.quiet_left -= 1;
                    0
                } else {
                    self.quiet_left = self.rng.gen_range(0..8);
                    self.rng.gen_range(scale..=4 * scale)
                }
            }
        };
        let mut sources = Vec::with_capacity(attempts as usize);
        for _ in 0..attempts {
            let v = self.pick(network);
            let admitted = network
                .edges_to_root(v)
                .all(|e| self.tokens[e.0] >= one);
            if admitted {
                for e in network.edges_to_root(v) {
                    self.tokens[e.0] -= one;
                }
                sources.push(v);
            }
        }
        Ok(sources)
    }
}

/// Replays a recorded trace, then stays silent.
#[derive(Debug, Clone)]
pub struct Replay {
    trace: InjectionTrace,
}

impl Replay {
    pub fn new(trace: InjectionTrace) -> Self {
        Self { trace }
    }
}

impl InjectionPattern for Replay {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn next_round(&mut self, network: &TreeNetwork, round: u64, _: Option<&Configuration>) -> Result<Vec<NodeId>> {
        let sources = self.trace.round(round).to_vec();
        for &v in &sources {
            network.check_node(v)?;
        }
        Ok(sources)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> TreeNetwork {
        TreeNetwork::line(n, 1).unwrap()
    }

    fn unit_bound() -> BurstinessBound<Rational> {
        BurstinessBound::new(Rational::from_integer(1), Rational::from_integer(0)).unwrap()
    }

    fn collect(pattern: &mut dyn InjectionPattern, net: &TreeNetwork, rounds: u64) -> InjectionTrace {
        let cfg = Configuration::new(net);
        InjectionTrace::from_rounds(
            (1..=rounds)
                .map(|r| pattern.next_round(net, r, Some(&cfg)).unwrap())
                .collect(),
        )
    }

    #[test]
    fn constant_emits_every_round() {
        let net = line(5);
        let mut p = constant_at_node(NodeId(0), 1).unwrap();
        let trace = collect(&mut p, &net, 10);
        assert_eq!(trace.round(7), &[NodeId(0)]);
        assert!(audit(&trace, &net, &unit_bound()).unwrap().is_compliant());
        let mut p2 = constant_at_node(NodeId(0), 2).unwrap();
        let trace2 = collect(&mut p2, &net, 3);
        assert!(!audit(&trace2, &net, &unit_bound()).unwrap().is_compliant());
        assert!(constant_at_node(NodeId(0), 0).is_err());
    }

    #[test]
    fn two_phase_schedule() {
        let net = line(8);
        let mut p = two_phase(8).unwrap();
        let trace = collect(&mut p, &net, 10);
        let flat: Vec<Vec<usize>> = trace
            .rounds()
            .map(|r| r.iter().map(|v| v.0).collect())
            .collect();
        assert_eq!(
            flat,
            vec![vec![0], vec![2], vec![4], vec![6], vec![6], vec![6], vec![6], vec![6], vec![], vec![]]
        );
        assert!(audit(&trace, &net, &unit_bound()).unwrap().is_compliant());
        assert!(matches!(two_phase(7), Err(Error::InvalidArgument(_))));
        assert!(two_phase(2).is_err());
    }

    #[test]
    fn adaptive_needs_configuration() {
        let net = line(4);
        let mut p = adaptive_max_load(1, 0).unwrap();
        assert!(matches!(p.next_round(&net, 1, None), Err(Error::Adaptivity(_))));
    }

    #[test]
    fn adaptive_first_round_and_ties() {
        let net = line(6);
        let mut p = adaptive_max_load(2, 3).unwrap();
        let empty = Configuration::new(&net);
        assert_eq!(p.next_round(&net, 1, Some(&empty)).unwrap(), vec![NodeId(0); 2]);

        let mut p = adaptive_max_load(3, 0).unwrap();
        let cfg = Configuration::from_loads(&net, &[2, 2, 0, 0, 0, 0]).unwrap();
        assert_eq!(p.next_round(&net, 2, Some(&cfg)).unwrap(), vec![NodeId(0); 3]);
        let cfg = Configuration::from_loads(&net, &[1, 2, 2, 0, 0, 0]).unwrap();
        assert_eq!(p.next_round(&net, 3, Some(&cfg)).unwrap(), vec![NodeId(1); 3]);
    }

    #[test]
    fn adaptive_bursts_once_then_halts() {
        let net = line(6);
        let mut p = adaptive_max_load(1, 2).unwrap();
        let cfg = Configuration::from_loads(&net, &[2, 2, 0, 0, 0, 0]).unwrap();
        assert_eq!(p.next_round(&net, 4, Some(&cfg)).unwrap(), vec![NodeId(0); 3]);
        assert_eq!(p.burst_round(), Some(4));
        assert!(p.next_round(&net, 5, Some(&cfg)).unwrap().is_empty());
    }

    #[test]
    fn random_patterns_comply() {
        let net = TreeNetwork::line(10, 2).unwrap();
        for (rho, sigma) in [(2, 0), (2, 5), (1, 1)] {
            let b = BurstinessBound::new(Rational::from_integer(rho), Rational::from_integer(sigma)).unwrap();
            for seed in 0..9 {
                let mut p = RandomCompliant::new(b, seed);
                let trace = collect(&mut p, &net, 300);
                assert!(trace.total() > 0);
                assert!(audit_exhaustive(&trace, &net, &b).unwrap().is_compliant());
            }
        }
    }

    #[test]
    fn random_with_fractional_rate_complies() {
        let net = TreeNetwork::line(6, 1).unwrap();
        let b = BurstinessBound::new(Rational::new(2, 3), Rational::new(3, 2)).unwrap();
        let mut p = RandomCompliant::with_style(b, RandomStyle::Bursty, 11);
        let trace = collect(&mut p, &net, 200);
        assert!(audit_exhaustive(&trace, &net, &b).unwrap().is_compliant());
    }

    #[test]
    fn replay_reproduces_trace() {
        let net = line(4);
        let trace = InjectionTrace::from_rounds(vec![vec![NodeId(1)], vec![], vec![NodeId(0), NodeId(2)]]);
        let mut p = Replay::new(trace.clone());
        assert_eq!(collect(&mut p, &net, 3), trace);
    }
}
